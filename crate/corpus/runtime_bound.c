int n;
#pragma omp unroll partial(2)
#pragma omp tile sizes(4)
for (long i = -n; i <= n; i += 2)
  body(i);
