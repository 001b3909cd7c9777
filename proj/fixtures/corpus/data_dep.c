void shift(double* a, double* b, int n) {
  for (int i = 0; i < n; i++)
    b[i] = a[i] * 0.5;

  for (int i = 1; i < n; i++)
    a[i] = a[i - 1] + 1.0;
}
