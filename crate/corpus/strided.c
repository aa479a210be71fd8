for (int i = 7; i < 17; i += 3)
  body(i);
