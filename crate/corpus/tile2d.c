#pragma omp tile sizes(2, 2)
for (int i = 0; i < 4; ++i)
  for (int j = 0; j < 3; ++j)
    body(i, j);
