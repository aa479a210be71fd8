#pragma omp tile sizes(3)
for (uint u = 4294967290u; u != 5; ++u)
  body(u);
