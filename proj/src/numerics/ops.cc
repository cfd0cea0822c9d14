// Copyright 2026 The DGIN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "dgin/error.h"
#include "dgin/numerics/kernels.h"
#include "dgin/numerics/tape.h"

namespace dgin::ad {
namespace {

bool Needs(Tape& t, int id) { return t.RequiresGrad(Var{id}); }

void RequireSameShape(const ValueGrid& a, const ValueGrid& b, const char* op) {
  if (!a.SameShape(b)) {
    throw DimensionError(std::string(op) + ": shape " + a.ShapeString() + " vs " + b.ShapeString());
  }
}

void RequireMask(std::span<const std::uint8_t> mask, std::size_t expected, const char* op) {
  if (!mask.empty() && mask.size() != expected) {
    throw DimensionError(std::string(op) + ": mask has " + std::to_string(mask.size()) +
                         " entries, expected " + std::to_string(expected));
  }
}

}  // namespace

Var MatMul(Tape& t, Var a, Var b) {
  const ValueGrid& av = t.Value(a);
  const ValueGrid& bv = t.Value(b);
  if (av.cols() != bv.rows()) {
    throw DimensionError("MatMul: inner dimensions disagree, " + av.ShapeString() + " times " +
                         bv.ShapeString());
  }
  const int n = av.rows(), k = av.cols(), m = bv.cols();
  ValueGrid out(n, m);
  simd::Active().gemm_nn(n, k, m, av.data(), bv.data(), out.data());
  const int ia = a.id, ib = b.id;
  return t.Record(std::move(out), {a, b}, [ia, ib, n, k, m](Tape& t, const ValueGrid& g) {
    const auto& kern = simd::Active();
    if (Needs(t, ia)) kern.gemm_nt(n, m, k, g.data(), t.Value(Var{ib}).data(), t.AccumulateGrad(ia).data());
    if (Needs(t, ib)) kern.gemm_tn(n, k, m, t.Value(Var{ia}).data(), g.data(), t.AccumulateGrad(ib).data());
  });
}

Var AddBias(Tape& t, Var x, Var bias) {
  const ValueGrid& xv = t.Value(x);
  const ValueGrid& bv = t.Value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw DimensionError("AddBias: bias " + bv.ShapeString() + " for input " + xv.ShapeString());
  }
  ValueGrid out = xv;
  const auto& kern = simd::Active();
  for (int r = 0; r < out.rows(); ++r) kern.add(out.cols(), bv.data(), out.row(r));
  const int ix = x.id, ib = bias.id;
  return t.Record(std::move(out), {x, bias}, [ix, ib](Tape& t, const ValueGrid& g) {
    const auto& kern = simd::Active();
    if (Needs(t, ix)) kern.add(static_cast<int>(g.size()), g.data(), t.AccumulateGrad(ix).data());
    if (Needs(t, ib)) {
      ValueGrid& gb = t.AccumulateGrad(ib);
      for (int r = 0; r < g.rows(); ++r) kern.add(g.cols(), g.row(r), gb.data());
    }
  });
}

Var Linear(Tape& t, Var x, Var w, Var bias) {
  Var y = MatMul(t, x, w);
  return bias.valid() ? AddBias(t, y, bias) : y;
}

Var Add(Tape& t, Var a, Var b) {
  RequireSameShape(t.Value(a), t.Value(b), "Add");
  ValueGrid out = t.Value(a);
  simd::Active().add(static_cast<int>(out.size()), t.Value(b).data(), out.data());
  const int ia = a.id, ib = b.id;
  return t.Record(std::move(out), {a, b}, [ia, ib](Tape& t, const ValueGrid& g) {
    const auto& kern = simd::Active();
    if (Needs(t, ia)) kern.add(static_cast<int>(g.size()), g.data(), t.AccumulateGrad(ia).data());
    if (Needs(t, ib)) kern.add(static_cast<int>(g.size()), g.data(), t.AccumulateGrad(ib).data());
  });
}

Var Sub(Tape& t, Var a, Var b) {
  RequireSameShape(t.Value(a), t.Value(b), "Sub");
  ValueGrid out = t.Value(a);
  simd::Active().axpy(static_cast<int>(out.size()), -1.0, t.Value(b).data(), out.data());
  const int ia = a.id, ib = b.id;
  return t.Record(std::move(out), {a, b}, [ia, ib](Tape& t, const ValueGrid& g) {
    const auto& kern = simd::Active();
    if (Needs(t, ia)) kern.add(static_cast<int>(g.size()), g.data(), t.AccumulateGrad(ia).data());
    if (Needs(t, ib)) kern.axpy(static_cast<int>(g.size()), -1.0, g.data(), t.AccumulateGrad(ib).data());
  });
}

Var Mul(Tape& t, Var a, Var b) {
  const ValueGrid& av = t.Value(a);
  const ValueGrid& bv = t.Value(b);
  RequireSameShape(av, bv, "Mul");
  ValueGrid out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
  const int ia = a.id, ib = b.id;
  return t.Record(std::move(out), {a, b}, [ia, ib](Tape& t, const ValueGrid& g) {
    if (Needs(t, ia)) {
      ValueGrid& ga = t.AccumulateGrad(ia);
      const ValueGrid& bv = t.Value(Var{ib});
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv.data()[i];
    }
    if (Needs(t, ib)) {
      ValueGrid& gb = t.AccumulateGrad(ib);
      const ValueGrid& av = t.Value(Var{ia});
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av.data()[i];
    }
  });
}

Var Scale(Tape& t, Var a, double s) {
  ValueGrid out = t.Value(a);
  for (double& v : out.values()) v *= s;
  const int ia = a.id;
  return t.Record(std::move(out), {a}, [ia, s](Tape& t, const ValueGrid& g) {
    simd::Active().axpy(static_cast<int>(g.size()), s, g.data(), t.AccumulateGrad(ia).data());
  });
}

Var Relu(Tape& t, Var x) {
  ValueGrid out = t.Value(x);
  for (double& v : out.values()) v = std::max(v, 0.0);
  const int ix = x.id;
  return t.Record(std::move(out), {x}, [ix](Tape& t, const ValueGrid& g) {
    const ValueGrid& xv = t.Value(Var{ix});
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv.data()[i] > 0.0) gx.data()[i] += g.data()[i];
  });
}

Var Sigmoid(Tape& t, Var x) {
  ValueGrid out = t.Value(x);
  for (double& v : out.values()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const int ix = x.id;
  const int self = static_cast<int>(t.size());
  return t.Record(std::move(out), {x}, [ix, self](Tape& t, const ValueGrid& g) {
    const ValueGrid& y = t.Value(Var{self});
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
  });
}

Var ConcatCols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("ConcatCols: no inputs");
  const int rows = t.Value(parts[0]).rows();
  std::vector<int> offsets;
  int cols = 0;
  for (Var p : parts) {
    const ValueGrid& v = t.Value(p);
    if (v.rows() != rows) {
      throw DimensionError("ConcatCols: row count " + v.ShapeString() + " vs " + std::to_string(rows));
    }
    offsets.push_back(cols);
    cols += v.cols();
  }
  ValueGrid out(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const ValueGrid& v = t.Value(parts[i]);
    for (int r = 0; r < rows; ++r) std::copy_n(v.row(r), v.cols(), out.row(r) + offsets[i]);
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  return t.Record(std::move(out), parts, [ids, offsets](Tape& t, const ValueGrid& g) {
    const auto& kern = simd::Active();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!Needs(t, ids[i])) continue;
      ValueGrid& gp = t.AccumulateGrad(ids[i]);
      for (int r = 0; r < g.rows(); ++r) kern.add(gp.cols(), g.row(r) + offsets[i], gp.row(r));
    }
  });
}

Var ConcatRows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("ConcatRows: no inputs");
  const int cols = t.Value(parts[0]).cols();
  std::vector<int> offsets;
  int rows = 0;
  for (Var p : parts) {
    const ValueGrid& v = t.Value(p);
    if (v.cols() != cols) {
      throw DimensionError("ConcatRows: column count " + v.ShapeString() + " vs " + std::to_string(cols));
    }
    offsets.push_back(rows);
    rows += v.rows();
  }
  ValueGrid out(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const ValueGrid& v = t.Value(parts[i]);
    std::copy_n(v.data(), v.size(), out.row(offsets[i]));
  }
  std::vector<int> ids;
  for (Var p : parts) ids.push_back(p.id);
  return t.Record(std::move(out), parts, [ids, offsets](Tape& t, const ValueGrid& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!Needs(t, ids[i])) continue;
      ValueGrid& gp = t.AccumulateGrad(ids[i]);
      simd::Active().add(static_cast<int>(gp.size()), g.row(offsets[i]), gp.data());
    }
  });
}

Var SliceCols(Tape& t, Var x, int begin, int end) {
  const ValueGrid& xv = t.Value(x);
  if (begin < 0 || end > xv.cols() || begin > end) {
    throw DimensionError("SliceCols: [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of " + xv.ShapeString());
  }
  ValueGrid out(xv.rows(), end - begin);
  for (int r = 0; r < xv.rows(); ++r) std::copy_n(xv.row(r) + begin, end - begin, out.row(r));
  const int ix = x.id;
  return t.Record(std::move(out), {x}, [ix, begin](Tape& t, const ValueGrid& g) {
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (int r = 0; r < g.rows(); ++r) simd::Active().add(g.cols(), g.row(r), gx.row(r) + begin);
  });
}

Var SelectRows(Tape& t, Var x, std::span<const int> index) {
  const ValueGrid& xv = t.Value(x);
  ValueGrid out(static_cast<int>(index.size()), xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= xv.rows()) {
      throw DimensionError("SelectRows: row " + std::to_string(index[i]) + " out of " + xv.ShapeString());
    }
    std::copy_n(xv.row(index[i]), xv.cols(), out.row(static_cast<int>(i)));
  }
  const int ix = x.id;
  std::vector<int> idx(index.begin(), index.end());
  return t.Record(std::move(out), {x}, [ix, idx = std::move(idx)](Tape& t, const ValueGrid& g) {
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (std::size_t i = 0; i < idx.size(); ++i)
      simd::Active().add(g.cols(), g.row(static_cast<int>(i)), gx.row(idx[i]));
  });
}

Var Gather(Tape& t, Parameter& table, std::span<const int> index) {
  const ValueGrid& tv = table.value;
  ValueGrid out(static_cast<int>(index.size()), tv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= tv.rows()) {
      throw DimensionError("Gather: index " + std::to_string(index[i]) + " out of table " + table.name +
                           " " + tv.ShapeString());
    }
    std::copy_n(tv.row(index[i]), tv.cols(), out.row(static_cast<int>(i)));
  }
  Parameter* target = &table;
  std::vector<int> idx(index.begin(), index.end());
  return t.RecordParameterOp(std::move(out), [target, idx = std::move(idx)](Tape&, const ValueGrid& g) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      simd::Active().add(g.cols(), g.row(static_cast<int>(i)), target->grad.row(idx[i]));
  });
}

Var SoftmaxRows(Tape& t, Var x, std::span<const std::uint8_t> mask) {
  const ValueGrid& xv = t.Value(x);
  RequireMask(mask, xv.size(), "SoftmaxRows");
  const int n = xv.rows(), m = xv.cols();
  ValueGrid out(n, m);
  for (int r = 0; r < n; ++r) {
    const double* in = xv.row(r);
    const std::uint8_t* mk = mask.empty() ? nullptr : mask.data() + static_cast<std::size_t>(r) * m;
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c)
      if (mk == nullptr || mk[c]) mx = std::max(mx, in[c]);
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw PreconditionError("SoftmaxRows: row " + std::to_string(r) + " is fully masked (degenerate mask)");
    }
    double* o = out.row(r);
    double sum = 0.0;
    for (int c = 0; c < m; ++c) {
      o[c] = (mk == nullptr || mk[c]) ? std::exp(in[c] - mx) : 0.0;
      sum += o[c];
    }
    for (int c = 0; c < m; ++c) o[c] /= sum;
  }
  const int ix = x.id;
  const int self = static_cast<int>(t.size());
  return t.Record(std::move(out), {x}, [ix, self, n, m](Tape& t, const ValueGrid& g) {
    const ValueGrid& p = t.Value(Var{self});
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (int r = 0; r < n; ++r) {
      const double dotgp = simd::Active().dot(m, g.row(r), p.row(r));
      for (int c = 0; c < m; ++c) gx(r, c) += p(r, c) * (g(r, c) - dotgp);
    }
  });
}

Var LayerNorm(Tape& t, Var x, Var gain, Var shift, double eps) {
  const ValueGrid& xv = t.Value(x);
  const ValueGrid& gv = t.Value(gain);
  const ValueGrid& sv = t.Value(shift);
  const int n = xv.rows(), m = xv.cols();
  if (m < 1) throw DimensionError("LayerNorm: zero-width input");
  if (gv.rows() != 1 || gv.cols() != m || !gv.SameShape(sv)) {
    throw DimensionError("LayerNorm: gain " + gv.ShapeString() + " / shift " + sv.ShapeString() +
                         " for input " + xv.ShapeString());
  }
  auto xhat = std::make_shared<ValueGrid>(n, m);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  ValueGrid out(n, m);
  for (int r = 0; r < n; ++r) {
    const double* in = xv.row(r);
    double mean = 0.0;
    for (int c = 0; c < m; ++c) mean += in[c];
    mean /= m;
    double var = 0.0;
    for (int c = 0; c < m; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= m;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int c = 0; c < m; ++c) {
      const double h = (in[c] - mean) * is;
      (*xhat)(r, c) = h;
      out(r, c) = h * gv(0, c) + sv(0, c);
    }
  }
  const int ix = x.id, ig = gain.id, ish = shift.id;
  return t.Record(std::move(out), {x, gain, shift},
                  [ix, ig, ish, xhat, inv_std, n, m](Tape& t, const ValueGrid& g) {
                    const ValueGrid& gv = t.Value(Var{ig});
                    if (Needs(t, ig)) {
                      ValueGrid& gg = t.AccumulateGrad(ig);
                      for (int r = 0; r < n; ++r)
                        for (int c = 0; c < m; ++c) gg(0, c) += g(r, c) * (*xhat)(r, c);
                    }
                    if (Needs(t, ish)) {
                      ValueGrid& gs = t.AccumulateGrad(ish);
                      for (int r = 0; r < n; ++r) simd::Active().add(m, g.row(r), gs.data());
                    }
                    if (Needs(t, ix)) {
                      ValueGrid& gx = t.AccumulateGrad(ix);
                      std::vector<double> dh(m);
                      for (int r = 0; r < n; ++r) {
                        double mean_dh = 0.0, mean_dh_h = 0.0;
                        for (int c = 0; c < m; ++c) {
                          dh[c] = g(r, c) * gv(0, c);
                          mean_dh += dh[c];
                          mean_dh_h += dh[c] * (*xhat)(r, c);
                        }
                        mean_dh /= m;
                        mean_dh_h /= m;
                        const double is = (*inv_std)[r];
                        for (int c = 0; c < m; ++c) gx(r, c) += is * (dh[c] - mean_dh - (*xhat)(r, c) * mean_dh_h);
                      }
                    }
                  });
}

Var FeedForward(Tape& t, Var x, Var w1, Var b1, Var w2, Var b2) {
  const ValueGrid& xv = t.Value(x);
  const ValueGrid& w1v = t.Value(w1);
  const ValueGrid& w2v = t.Value(w2);
  if (w1v.rows() != xv.cols() || w2v.rows() != w1v.cols() || w2v.cols() != xv.cols()) {
    throw DimensionError("FeedForward: input " + xv.ShapeString() + ", w1 " + w1v.ShapeString() + ", w2 " +
                         w2v.ShapeString());
  }
  return Linear(t, Relu(t, Linear(t, x, w1, b1)), w2, b2);
}

Var SegmentMean(Tape& t, Var x, std::span<const RowRange> ranges) {
  const ValueGrid& xv = t.Value(x);
  const int m = xv.cols();
  ValueGrid out(static_cast<int>(ranges.size()), m);
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    const RowRange r = ranges[s];
    if (r.begin < 0 || r.end > xv.rows() || r.begin >= r.end) {
      throw PreconditionError("SegmentMean: empty or out-of-range segment [" + std::to_string(r.begin) + "," +
                              std::to_string(r.end) + ") over " + xv.ShapeString());
    }
    double* o = out.row(static_cast<int>(s));
    for (int i = r.begin; i < r.end; ++i) simd::Active().add(m, xv.row(i), o);
    const double inv = 1.0 / (r.end - r.begin);
    for (int c = 0; c < m; ++c) o[c] *= inv;
  }
  const int ix = x.id;
  std::vector<RowRange> rs(ranges.begin(), ranges.end());
  return t.Record(std::move(out), {x}, [ix, rs = std::move(rs), m](Tape& t, const ValueGrid& g) {
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (std::size_t s = 0; s < rs.size(); ++s) {
      const double inv = 1.0 / (rs[s].end - rs[s].begin);
      for (int i = rs[s].begin; i < rs[s].end; ++i)
        simd::Active().axpy(m, inv, g.row(static_cast<int>(s)), gx.row(i));
    }
  });
}

Var Attention(Tape& t, Var q, Var k, Var v, int heads, std::span<const AttentionSegment> segments,
              std::span<const std::uint8_t> key_mask) {
  const ValueGrid& qv = t.Value(q);
  const ValueGrid& kv = t.Value(k);
  const ValueGrid& vv = t.Value(v);
  if (heads < 1 || qv.cols() % heads != 0 || vv.cols() % heads != 0) {
    throw ConfigError("Attention: " + std::to_string(heads) + " heads do not divide widths " +
                      std::to_string(qv.cols()) + "/" + std::to_string(vv.cols()));
  }
  if (qv.cols() != kv.cols() || kv.rows() != vv.rows()) {
    throw DimensionError("Attention: q " + qv.ShapeString() + ", k " + kv.ShapeString() + ", v " +
                         vv.ShapeString());
  }
  RequireMask(key_mask, static_cast<std::size_t>(kv.rows()), "Attention");
  const int dk = qv.cols() / heads;
  const int dv = vv.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const auto& kern = simd::Active();

  // Probabilities per (segment, head) block, row-major nq x nk.
  auto probs = std::make_shared<std::vector<double>>();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const AttentionSegment& s : segments) {
    if (s.query_begin < 0 || s.query_end > qv.rows() || s.query_begin > s.query_end || s.key_begin < 0 ||
        s.key_end > kv.rows() || s.key_begin >= s.key_end) {
      throw PreconditionError("Attention: invalid segment q[" + std::to_string(s.query_begin) + "," +
                              std::to_string(s.query_end) + ") k[" + std::to_string(s.key_begin) + "," +
                              std::to_string(s.key_end) + ")");
    }
    offsets.push_back(total);
    total += static_cast<std::size_t>(s.query_end - s.query_begin) * (s.key_end - s.key_begin) * heads;
  }
  probs->resize(total);

  ValueGrid out(qv.rows(), vv.cols());
  std::vector<double> scores;
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const AttentionSegment& s = segments[si];
    const int nq = s.query_end - s.query_begin;
    const int nk = s.key_end - s.key_begin;
    bool any_key = key_mask.empty();
    for (int j = s.key_begin; j < s.key_end && !any_key; ++j) any_key = key_mask[j] != 0;
    if (!any_key) throw PreconditionError("Attention: segment " + std::to_string(si) + " has every key masked");
    scores.resize(nk);
    for (int h = 0; h < heads; ++h) {
      double* block = probs->data() + offsets[si] + static_cast<std::size_t>(h) * nq * nk;
      for (int a = 0; a < nq; ++a) {
        const double* qrow = qv.row(s.query_begin + a) + h * dk;
        double mx = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < nk; ++b) {
          const int j = s.key_begin + b;
          if (!key_mask.empty() && !key_mask[j]) continue;
          scores[b] = kern.dot(dk, qrow, kv.row(j) + h * dk) * scale;
          mx = std::max(mx, scores[b]);
        }
        double sum = 0.0;
        double* prow = block + static_cast<std::size_t>(a) * nk;
        for (int b = 0; b < nk; ++b) {
          const int j = s.key_begin + b;
          prow[b] = (!key_mask.empty() && !key_mask[j]) ? 0.0 : std::exp(scores[b] - mx);
          sum += prow[b];
        }
        double* orow = out.row(s.query_begin + a) + h * dv;
        for (int b = 0; b < nk; ++b) {
          prow[b] /= sum;
          if (prow[b] != 0.0) kern.axpy(dv, prow[b], vv.row(s.key_begin + b) + h * dv, orow);
        }
      }
    }
  }

  const int iq = q.id, ik = k.id, iv = v.id;
  std::vector<AttentionSegment> segs(segments.begin(), segments.end());
  return t.Record(
      std::move(out), {q, k, v},
      [iq, ik, iv, heads, dk, dv, scale, probs, offsets = std::move(offsets), segs = std::move(segs)](
          Tape& t, const ValueGrid& g) {
        const auto& kern = simd::Active();
        const ValueGrid& qv = t.Value(Var{iq});
        const ValueGrid& kv = t.Value(Var{ik});
        const ValueGrid& vv = t.Value(Var{iv});
        const bool need_q = Needs(t, iq), need_k = Needs(t, ik), need_v = Needs(t, iv);
        ValueGrid* gq = need_q ? &t.AccumulateGrad(iq) : nullptr;
        ValueGrid* gk = need_k ? &t.AccumulateGrad(ik) : nullptr;
        ValueGrid* gv = need_v ? &t.AccumulateGrad(iv) : nullptr;
        std::vector<double> dp;
        for (std::size_t si = 0; si < segs.size(); ++si) {
          const AttentionSegment& s = segs[si];
          const int nq = s.query_end - s.query_begin;
          const int nk = s.key_end - s.key_begin;
          dp.resize(nk);
          for (int h = 0; h < heads; ++h) {
            const double* block = probs->data() + offsets[si] + static_cast<std::size_t>(h) * nq * nk;
            for (int a = 0; a < nq; ++a) {
              const int i = s.query_begin + a;
              const double* grow = g.row(i) + h * dv;
              const double* prow = block + static_cast<std::size_t>(a) * nk;
              double pdp = 0.0;
              for (int b = 0; b < nk; ++b) {
                if (prow[b] == 0.0) {
                  dp[b] = 0.0;
                  continue;
                }
                const int j = s.key_begin + b;
                dp[b] = kern.dot(dv, grow, vv.row(j) + h * dv);
                pdp += prow[b] * dp[b];
                if (gv != nullptr) kern.axpy(dv, prow[b], grow, gv->row(j) + h * dv);
              }
              if (gq == nullptr && gk == nullptr) continue;
              for (int b = 0; b < nk; ++b) {
                if (prow[b] == 0.0) continue;
                const int j = s.key_begin + b;
                const double ds = prow[b] * (dp[b] - pdp) * scale;
                if (gq != nullptr) kern.axpy(dk, ds, kv.row(j) + h * dk, gq->row(i) + h * dk);
                if (gk != nullptr) kern.axpy(dk, ds, qv.row(i) + h * dk, gk->row(j) + h * dk);
              }
            }
          }
        }
      });
}

Var Sum(Tape& t, Var x) {
  const ValueGrid& xv = t.Value(x);
  double s = 0.0;
  for (double v : xv.values()) s += v;
  const int ix = x.id;
  return t.Record(ValueGrid(1, 1, s), {x}, [ix](Tape& t, const ValueGrid& g) {
    ValueGrid& gx = t.AccumulateGrad(ix);
    for (double& v : gx.values()) v += g(0, 0);
  });
}

Var Mean(Tape& t, Var x) {
  const std::size_t n = t.Value(x).size();
  if (n == 0) throw PreconditionError("Mean of an empty grid");
  return Scale(t, Sum(t, x), 1.0 / static_cast<double>(n));
}

Var BinaryCrossEntropy(Tape& t, Var p, std::span<const double> labels) {
  const ValueGrid& pv = t.Value(p);
  const int n = pv.rows();
  if (n == 0) throw PreconditionError("BinaryCrossEntropy: empty batch");
  if (pv.cols() != 1 || labels.size() != static_cast<std::size_t>(n)) {
    throw DimensionError("BinaryCrossEntropy: predictions " + pv.ShapeString() + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  constexpr double kLo = 1e-12, kHi = 1.0 - 1e-12;
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pc = std::clamp(pv(i, 0), kLo, kHi);
    loss -= labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc);
  }
  loss /= n;
  const int ip = p.id;
  std::vector<double> y(labels.begin(), labels.end());
  return t.Record(ValueGrid(1, 1, loss), {p}, [ip, y = std::move(y), n](Tape& t, const ValueGrid& g) {
    const ValueGrid& pv = t.Value(Var{ip});
    ValueGrid& gp = t.AccumulateGrad(ip);
    for (int i = 0; i < n; ++i) {
      const double pi = pv(i, 0);
      if (pi < kLo || pi > kHi) continue;
      gp(i, 0) += g(0, 0) * (-(y[i] / pi) + (1.0 - y[i]) / (1.0 - pi)) / n;
    }
  });
}

}  // namespace dgin::ad
