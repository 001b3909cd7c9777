#include <math.h>

void scale(double* a, double* b, int n) {
  for (int i = 0; i < n; i++)
    a[i] = a[i] * 2.0 + 1.0;

  for (int i = 0; i < n; i++)
    b[i] = log(a[i]);
}
