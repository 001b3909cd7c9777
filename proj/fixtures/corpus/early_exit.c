void clamp(double* a, int n, double limit) {
  for (int i = 0; i < n; i++)
    a[i] = a[i] / limit;

  for (int i = 0; i < n; i++) {
    if (a[i] > limit)
      break;
    a[i] = a[i] * a[i];
  }
}
