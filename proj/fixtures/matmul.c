#include <stdio.h>

#define N 256

static double a[N][N], b[N][N], c[N][N], bt[N][N];

int main(void) {
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      a[i][j] = (double)(i + j) / N;

  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      b[i][j] = (double)(i - j) / N;

  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      c[i][j] = 0.0;

  /* transpose b so the matmul inner loop is stride-1 */
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      bt[i][j] = b[j][i];

  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      for (int k = 0; k < N; k++)
        c[i][j] += a[i][k] * bt[j][k];

  double sum = 0.0;
  for (int i = 0; i < N; i++)
    sum += c[i][i];

  printf("checksum %.6f\n", sum);
  return 0;
}
