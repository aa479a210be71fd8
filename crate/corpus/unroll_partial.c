#pragma omp unroll partial(4)
for (int i = 0; i < 10; ++i)
  body(i);
