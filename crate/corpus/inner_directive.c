for (int i = 0; i < 4; ++i) {
  #pragma omp unroll partial(2)
  for (int j = i; j < 6; j += 2)
    body(i, j);
}
