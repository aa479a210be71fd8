#pragma omp for
for (int i = 0; i < 10; ++i)
  body(i);
