#pragma omp unroll partial(2)
for (int i = 0; i < 8; ++i) {
  body(i);
  i += 1;
}
