#pragma omp unroll full
#pragma omp unroll partial(2)
for (int i = 7; i < 17; i += 3)
  body(i);
