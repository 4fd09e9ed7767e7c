#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace sardet::layer_ops {

/// Kernels behind the network layers. Layouts: activations are NHWC,
/// conv weights [3][3][in_ch][out_ch], dense weights [in_dim][out_dim].
/// Forward kernels are templated so gradient checks can rerun them in double.

/// 3x3 cross-correlation, stride 1, zero padding 1.
template <class T>
void conv2d_fwd(const T* in, int n, int h, int w, int c, const T* wt, const T* bias, int oc,
                T* out) {
    for (int s = 0; s < n; ++s) {
        const T* inp = in + static_cast<std::size_t>(s) * h * w * c;
        T* outp = out + static_cast<std::size_t>(s) * h * w * oc;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                T* o = outp + (static_cast<std::size_t>(y) * w + x) * oc;
                for (int k = 0; k < oc; ++k) o[k] = bias[k];
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = x + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        const T* ip = inp + (static_cast<std::size_t>(iy) * w + ix) * c;
                        const T* wp = wt + static_cast<std::size_t>(ky * 3 + kx) * c * oc;
                        for (int ic = 0; ic < c; ++ic) {
                            const T v = ip[ic];
                            const T* wr = wp + static_cast<std::size_t>(ic) * oc;
                            for (int k = 0; k < oc; ++k) o[k] += v * wr[k];
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_bwd(const float* in, const float* dout, int n, int h, int w, int c, int oc,
                       const float* wt, float* din, float* dw, float* db) {
    for (int s = 0; s < n; ++s) {
        const float* inp = in + static_cast<std::size_t>(s) * h * w * c;
        float* dinp = din + static_cast<std::size_t>(s) * h * w * c;
        const float* doutp = dout + static_cast<std::size_t>(s) * h * w * oc;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float* dg = doutp + (static_cast<std::size_t>(y) * w + x) * oc;
                for (int k = 0; k < oc; ++k) db[k] += dg[k];
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = x + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        const float* ip = inp + (static_cast<std::size_t>(iy) * w + ix) * c;
                        float* dip = dinp + (static_cast<std::size_t>(iy) * w + ix) * c;
                        const float* wp = wt + static_cast<std::size_t>(ky * 3 + kx) * c * oc;
                        float* dwp = dw + static_cast<std::size_t>(ky * 3 + kx) * c * oc;
                        for (int ic = 0; ic < c; ++ic) {
                            const float v = ip[ic];
                            const float* wr = wp + static_cast<std::size_t>(ic) * oc;
                            float* dwr = dwp + static_cast<std::size_t>(ic) * oc;
                            float acc = 0.0f;
                            for (int k = 0; k < oc; ++k) {
                                dwr[k] += v * dg[k];
                                acc += wr[k] * dg[k];
                            }
                            dip[ic] += acc;
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void relu_fwd(const T* in, std::size_t n, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

/// Subgradient at 0 is 0.
inline void relu_bwd(const float* in, const float* dout, std::size_t n, float* din) {
    for (std::size_t i = 0; i < n; ++i) din[i] = in[i] > 0.0f ? dout[i] : 0.0f;
}

/// 2x2 max pooling, stride 2. argmax, when given, records flat input
/// indices; ties resolve to the first maximum in row-major window order.
template <class T>
void maxpool_fwd(const T* in, int n, int h, int w, int c, T* out, std::int64_t* argmax) {
    const int oh = h / 2, ow = w / 2;
    std::size_t oi = 0;
    for (int s = 0; s < n; ++s) {
        const std::size_t base = static_cast<std::size_t>(s) * h * w * c;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int k = 0; k < c; ++k) {
                    T best{};
                    std::int64_t best_idx = -1;
                    for (int wy = 0; wy < 2; ++wy) {
                        for (int wx = 0; wx < 2; ++wx) {
                            const std::size_t idx =
                                base +
                                ((static_cast<std::size_t>(oy * 2 + wy) * w) + (ox * 2 + wx)) * c +
                                k;
                            if (best_idx < 0 || in[idx] > best) {
                                best = in[idx];
                                best_idx = static_cast<std::int64_t>(idx);
                            }
                        }
                    }
                    out[oi] = best;
                    if (argmax) argmax[oi] = best_idx;
                    ++oi;
                }
            }
        }
    }
}

inline void maxpool_bwd(const std::int64_t* argmax, const float* dout, std::size_t n_out,
                        float* din) {
    for (std::size_t i = 0; i < n_out; ++i) din[argmax[i]] += dout[i];
}

template <class T>
void dense_fwd(const T* in, int n, int d, const T* wt, const T* bias, int od, T* out) {
    for (int s = 0; s < n; ++s) {
        const T* ip = in + static_cast<std::size_t>(s) * d;
        T* o = out + static_cast<std::size_t>(s) * od;
        for (int k = 0; k < od; ++k) o[k] = bias[k];
        for (int i = 0; i < d; ++i) {
            const T v = ip[i];
            const T* wr = wt + static_cast<std::size_t>(i) * od;
            for (int k = 0; k < od; ++k) o[k] += v * wr[k];
        }
    }
}

inline void dense_bwd(const float* in, const float* dout, int n, int d, int od, const float* wt,
                      float* din, float* dw, float* db) {
    for (int s = 0; s < n; ++s) {
        const float* ip = in + static_cast<std::size_t>(s) * d;
        const float* dg = dout + static_cast<std::size_t>(s) * od;
        float* dip = din + static_cast<std::size_t>(s) * d;
        for (int k = 0; k < od; ++k) db[k] += dg[k];
        for (int i = 0; i < d; ++i) {
            const float v = ip[i];
            const float* wr = wt + static_cast<std::size_t>(i) * od;
            float* dwr = dw + static_cast<std::size_t>(i) * od;
            float acc = 0.0f;
            for (int k = 0; k < od; ++k) {
                dwr[k] += v * dg[k];
                acc += wr[k] * dg[k];
            }
            dip[i] = acc;
        }
    }
}

/// Row-wise stable softmax.
template <class T>
void softmax_fwd(const T* in, int n, int d, T* out) {
    for (int s = 0; s < n; ++s) {
        const T* ip = in + static_cast<std::size_t>(s) * d;
        T* o = out + static_cast<std::size_t>(s) * d;
        T m = ip[0];
        for (int k = 1; k < d; ++k) m = std::max(m, ip[k]);
        T sum = T(0);
        for (int k = 0; k < d; ++k) {
            o[k] = std::exp(ip[k] - m);
            sum += o[k];
        }
        for (int k = 0; k < d; ++k) o[k] /= sum;
    }
}

} // namespace sardet::layer_ops
