#pragma omp tile sizes(2, 2)
for (int i = 0; i < 4; ++i)
  body(i);
