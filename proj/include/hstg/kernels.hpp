#pragma once

namespace hstg::kern {

// Data-parallel inner loops behind the predictor, the optimizer and the
// scorer. The scalar table is the reference implementation; on x86-64 an AVX2
// variant is selected at runtime when the CPU supports it. Conventions:
// forward kernels overwrite their output, gradient kernels accumulate (+=).
//
// conv3 family: 1-D convolution along the node axis, kernel width 3,
// symmetric zero padding 1. `in` is in_ch rows of n values, `k3` is
// out_ch x in_ch x 3 row-major.

enum class Backend { scalar, avx2 };

struct Ops {
  // y = A x, A row-major n x n
  void (*matvec)(const double* a, const double* x, double* y, int n);
  void (*conv3)(const double* in, int in_ch, int n, const double* k3,
                const double* bias, double* out, int out_ch);
  // gin[i][v] += sum_o sum_k k3[o,i,k] * gout[o][v - k + 1]
  void (*conv3_grad_in)(const double* gout, int out_ch, int n, const double* k3,
                        double* gin, int in_ch);
  // gk[o,i,k] += sum_v gout[o][v] * in[i][v + k - 1];  gbias[o] += sum_v gout[o][v]
  void (*conv3_grad_k)(const double* gout, int out_ch, const double* in,
                       int in_ch, int n, double* gk, double* gbias);
  void (*prelu)(const double* x, double* y, int n, double slope);
  // gx[i] = gy[i] * (x[i] >= 0 ? 1 : slope); returns sum_{x<0} gy[i] * x[i]
  double (*prelu_grad)(const double* x, const double* gy, double* gx, int n, double slope);
  double (*sumsq_diff)(const double* a, const double* b, int n);
  void (*axpy)(double alpha, const double* x, double* y, int n);
  // v = beta*v + g; p -= lr*v
  void (*momentum_step)(double* p, double* v, const double* g, double beta, double lr, int n);
};

const Ops& ops();
const Ops& scalar_ops();  // reference table, used by equivalence tests

Backend active_backend();
void set_backend(Backend b);  // throws UsageError when unsupported
bool avx2_supported();

}  // namespace hstg::kern
