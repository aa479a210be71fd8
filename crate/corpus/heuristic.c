#pragma omp for
#pragma omp unroll
for (int i = 0; i < 9; ++i)
  body(i);
