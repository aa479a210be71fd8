#pragma omp for schedule(static, 2)
for (int i = 0; i < 8; i += 1)
  body(i);
