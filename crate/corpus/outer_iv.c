int i;
#pragma omp unroll partial(3)
for (i = 20; i > 0; i -= 3)
  body(i);
body(i);
