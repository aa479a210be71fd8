int n;
#pragma omp unroll full
for (int i = 0; i < n; ++i)
  body(i);
