#pragma omp for collapse(2) schedule(static, 3)
#pragma omp tile sizes(2, 2)
for (int i = 0; i < 5; ++i)
  for (int j = 0; j < 4; ++j)
    body(i, j);
