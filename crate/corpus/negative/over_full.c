#pragma omp tile sizes(2)
#pragma omp unroll full
for (int i = 0; i < 8; ++i)
  body(i);
