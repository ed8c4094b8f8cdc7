#include "hashgen/tape.hpp"

#include <cmath>

namespace hashgen {

namespace {

// C += A * B, all row-major, shapes checked by the caller.
void matmul_accum(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

Tape::Node& Tape::node(int idx) { return nodes_[static_cast<std::size_t>(idx)]; }
const Tape::Node& Tape::node(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }

void Tape::check(Var v, const char* op) const {
    if (!v.valid() || v.idx >= static_cast<int>(nodes_.size()))
        throw contract_error(std::string(op) + ": operand is not a value on this tape");
}

int Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backprop) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buffer(int idx) {
    Node& n = node(idx);
    if (!n.grad_ready) {
        n.grad = Tensor::zeros(n.value.shape);
        n.grad_ready = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(Var v) const {
    check(v, "grad");
    const Node& n = node(v.idx);
    if (!n.grad_ready)
        throw contract_error("grad: backward() has not reached this value");
    return n.grad;
}

Var Tape::leaf(Tensor value, bool requires_grad, std::string name) {
    int idx = push(std::move(value), requires_grad, nullptr);
    if (!name.empty()) {
        node(idx).name = name;
        named_leaves_.emplace_back(std::move(name), idx);
    }
    return Var{idx};
}

Var Tape::matmul(Var a, Var b) {
    check(a, "matmul");
    check(b, "matmul");
    const Tensor& av = node(a.idx).value;
    const Tensor& bv = node(b.idx).value;
    if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[1] != bv.shape[0])
        throw shape_error("matmul shape mismatch: " + shape_str(av.shape) + " x " + shape_str(bv.shape));
    int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor out = Tensor::zeros({m, n});
    matmul_accum(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, m, k, n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       const Tensor& aval = t.node(a.idx).value;
                       const Tensor& bval = t.node(b.idx).value;
                       if (t.node(a.idx).requires_grad) {
                           // dA += G * B^T
                           Tensor& da = t.grad_buffer(a.idx);
                           for (int i = 0; i < m; ++i) {
                               const double* grow = &g.data[static_cast<std::size_t>(i) * n];
                               double* darow = &da.data[static_cast<std::size_t>(i) * k];
                               for (int kk = 0; kk < k; ++kk) {
                                   const double* brow = &bval.data[static_cast<std::size_t>(kk) * n];
                                   double s = 0.0;
                                   for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                                   darow[kk] += s;
                               }
                           }
                       }
                       if (t.node(b.idx).requires_grad) {
                           // dB += A^T * G
                           Tensor& db = t.grad_buffer(b.idx);
                           for (int i = 0; i < m; ++i) {
                               const double* arow = &aval.data[static_cast<std::size_t>(i) * k];
                               const double* grow = &g.data[static_cast<std::size_t>(i) * n];
                               for (int kk = 0; kk < k; ++kk) {
                                   double a_ik = arow[kk];
                                   if (a_ik == 0.0) continue;
                                   double* dbrow = &db.data[static_cast<std::size_t>(kk) * n];
                                   for (int j = 0; j < n; ++j) dbrow[j] += a_ik * grow[j];
                               }
                           }
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::transpose(Var x) {
    check(x, "transpose");
    const Tensor& xv = node(x.idx).value;
    if (xv.shape.size() != 2) throw shape_error("transpose expects rank 2, got " + shape_str(xv.shape));
    int m = xv.shape[0], n = xv.shape[1];
    Tensor out = Tensor::zeros({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = xv.at(i, j);
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x, m, n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (int i = 0; i < m; ++i)
                           for (int j = 0; j < n; ++j) dx.at(i, j) += g.at(j, i);
                   })
                      : nullptr);
    return Var{idx};
}

namespace {
enum class EwKind { Add, Sub, Mul };
}

// Shared implementation for add/sub/mul with optional rank-1 broadcast of b.
static Tensor ew_forward(const Tensor& a, const Tensor& b, EwKind kind, bool& broadcast) {
    broadcast = false;
    if (a.shape == b.shape) {
        Tensor out = a;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            switch (kind) {
                case EwKind::Add: out.data[i] += b.data[i]; break;
                case EwKind::Sub: out.data[i] -= b.data[i]; break;
                case EwKind::Mul: out.data[i] *= b.data[i]; break;
            }
        }
        return out;
    }
    if (a.shape.size() == 2 && b.shape.size() == 1 && a.shape[1] == b.shape[0]) {
        broadcast = true;
        Tensor out = a;
        int m = a.shape[0], n = a.shape[1];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                double& o = out.data[static_cast<std::size_t>(i) * n + j];
                switch (kind) {
                    case EwKind::Add: o += b.data[j]; break;
                    case EwKind::Sub: o -= b.data[j]; break;
                    case EwKind::Mul: o *= b.data[j]; break;
                }
            }
        return out;
    }
    throw shape_error("elementwise shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
}

Var Tape::add(Var a, Var b) {
    check(a, "add");
    check(b, "add");
    bool broadcast = false;
    Tensor out = ew_forward(node(a.idx).value, node(b.idx).value, EwKind::Add, broadcast);
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, broadcast](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       if (t.node(a.idx).requires_grad) t.grad_buffer(a.idx).add_inplace(g);
                       if (t.node(b.idx).requires_grad) {
                           Tensor& db = t.grad_buffer(b.idx);
                           if (!broadcast) {
                               db.add_inplace(g);
                           } else {
                               int m = g.shape[0], n = g.shape[1];
                               for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < n; ++j) db.data[j] += g.at(i, j);
                           }
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::sub(Var a, Var b) {
    check(a, "sub");
    check(b, "sub");
    bool broadcast = false;
    Tensor out = ew_forward(node(a.idx).value, node(b.idx).value, EwKind::Sub, broadcast);
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, broadcast](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       if (t.node(a.idx).requires_grad) t.grad_buffer(a.idx).add_inplace(g);
                       if (t.node(b.idx).requires_grad) {
                           Tensor& db = t.grad_buffer(b.idx);
                           if (!broadcast) {
                               for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] -= g.data[i];
                           } else {
                               int m = g.shape[0], n = g.shape[1];
                               for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < n; ++j) db.data[j] -= g.at(i, j);
                           }
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::mul(Var a, Var b) {
    check(a, "mul");
    check(b, "mul");
    bool broadcast = false;
    Tensor out = ew_forward(node(a.idx).value, node(b.idx).value, EwKind::Mul, broadcast);
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, broadcast](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       const Tensor& av = t.node(a.idx).value;
                       const Tensor& bv = t.node(b.idx).value;
                       if (t.node(a.idx).requires_grad) {
                           Tensor& da = t.grad_buffer(a.idx);
                           if (!broadcast) {
                               for (std::size_t i = 0; i < g.data.size(); ++i)
                                   da.data[i] += g.data[i] * bv.data[i];
                           } else {
                               int m = g.shape[0], n = g.shape[1];
                               for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < n; ++j)
                                       da.data[static_cast<std::size_t>(i) * n + j] += g.at(i, j) * bv.data[j];
                           }
                       }
                       if (t.node(b.idx).requires_grad) {
                           Tensor& db = t.grad_buffer(b.idx);
                           if (!broadcast) {
                               for (std::size_t i = 0; i < g.data.size(); ++i)
                                   db.data[i] += g.data[i] * av.data[i];
                           } else {
                               int m = g.shape[0], n = g.shape[1];
                               for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < n; ++j) db.data[j] += g.at(i, j) * av.at(i, j);
                           }
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::tanh(Var x) {
    check(x, "tanh");
    Tensor out = node(x.idx).value;
    for (double& v : out.data) v = std::tanh(v);
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       const Tensor& y = t.node(self).value;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (std::size_t i = 0; i < g.data.size(); ++i)
                           dx.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::sigmoid(Var x) {
    check(x, "sigmoid");
    Tensor out = node(x.idx).value;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       const Tensor& y = t.node(self).value;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (std::size_t i = 0; i < g.data.size(); ++i)
                           dx.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::softmax_impl(Var x, const Tensor* mask, bool log_space) {
    check(x, log_space ? "log_softmax_rows" : "softmax_rows");
    const Tensor& xv = node(x.idx).value;
    if (xv.shape.size() != 2)
        throw shape_error("softmax_rows expects rank 2, got " + shape_str(xv.shape));
    if (mask && mask->shape != xv.shape)
        throw shape_error("softmax mask shape " + shape_str(mask->shape) + " does not match input " +
                          shape_str(xv.shape));
    int m = xv.shape[0], n = xv.shape[1];

    // Additive -inf surrogate keeps one code path for padded inputs; the
    // shifted exponent of a masked entry underflows to an exact zero.
    Tensor shifted = xv;
    if (mask) {
        for (int i = 0; i < m; ++i) {
            bool any = false;
            for (int j = 0; j < n; ++j) {
                if (mask->at(i, j) != 0.0) {
                    any = true;
                } else {
                    shifted.at(i, j) += -1e9;
                }
            }
            if (!any)
                throw contract_error("softmax_rows: row " + std::to_string(i) + " is fully masked");
        }
    }

    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        double mx = shifted.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, shifted.at(i, j));
        double denom = 0.0;
        for (int j = 0; j < n; ++j) denom += std::exp(shifted.at(i, j) - mx);
        if (log_space) {
            double log_denom = std::log(denom);
            for (int j = 0; j < n; ++j) out.at(i, j) = shifted.at(i, j) - mx - log_denom;
        } else {
            for (int j = 0; j < n; ++j) out.at(i, j) = std::exp(shifted.at(i, j) - mx) / denom;
        }
    }

    bool rg = node(x.idx).requires_grad;
    std::function<void(Tape&, int)> bp;
    if (rg && !log_space) {
        bp = [x, m, n](Tape& t, int self) {
            const Tensor& g = t.node(self).grad;
            const Tensor& y = t.node(self).value;
            Tensor& dx = t.grad_buffer(x.idx);
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < n; ++j) dx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
            }
        };
    } else if (rg) {
        bp = [x, m, n](Tape& t, int self) {
            const Tensor& g = t.node(self).grad;
            const Tensor& y = t.node(self).value; // log probabilities
            Tensor& dx = t.grad_buffer(x.idx);
            for (int i = 0; i < m; ++i) {
                double gsum = 0.0;
                for (int j = 0; j < n; ++j) gsum += g.at(i, j);
                for (int j = 0; j < n; ++j) dx.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gsum;
            }
        };
    }
    return Var{push(std::move(out), rg, std::move(bp))};
}

Var Tape::softmax_rows(Var x) { return softmax_impl(x, nullptr, false); }
Var Tape::softmax_rows(Var x, const Tensor& mask) { return softmax_impl(x, &mask, false); }
Var Tape::log_softmax_rows(Var x) { return softmax_impl(x, nullptr, true); }

Var Tape::concat_rows(Var a, Var b) {
    check(a, "concat_rows");
    check(b, "concat_rows");
    const Tensor& av = node(a.idx).value;
    const Tensor& bv = node(b.idx).value;
    if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[1] != bv.shape[1])
        throw shape_error("concat_rows shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    int ma = av.shape[0], mb = bv.shape[0], n = av.shape[1];
    Tensor out = Tensor::zeros({ma + mb, n});
    std::copy(av.data.begin(), av.data.end(), out.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.data.size());
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, ma, mb, n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       if (t.node(a.idx).requires_grad) {
                           Tensor& da = t.grad_buffer(a.idx);
                           for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i];
                       }
                       if (t.node(b.idx).requires_grad) {
                           Tensor& db = t.grad_buffer(b.idx);
                           std::size_t off = static_cast<std::size_t>(ma) * n;
                           for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += g.data[off + i];
                       }
                       (void)mb;
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::concat_cols(Var a, Var b) {
    check(a, "concat_cols");
    check(b, "concat_cols");
    const Tensor& av = node(a.idx).value;
    const Tensor& bv = node(b.idx).value;
    if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[0] != bv.shape[0])
        throw shape_error("concat_cols shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    int m = av.shape[0], na = av.shape[1], nb = bv.shape[1];
    Tensor out = Tensor::zeros({m, na + nb});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < na; ++j) out.at(i, j) = av.at(i, j);
        for (int j = 0; j < nb; ++j) out.at(i, na + j) = bv.at(i, j);
    }
    bool rg = node(a.idx).requires_grad || node(b.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([a, b, m, na, nb](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       if (t.node(a.idx).requires_grad) {
                           Tensor& da = t.grad_buffer(a.idx);
                           for (int i = 0; i < m; ++i)
                               for (int j = 0; j < na; ++j) da.at(i, j) += g.at(i, j);
                       }
                       if (t.node(b.idx).requires_grad) {
                           Tensor& db = t.grad_buffer(b.idx);
                           for (int i = 0; i < m; ++i)
                               for (int j = 0; j < nb; ++j) db.at(i, j) += g.at(i, na + j);
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw contract_error("stack_rows: no rows given");
    int n = -1;
    bool rg = false;
    for (Var r : rows) {
        check(r, "stack_rows");
        const Tensor& v = node(r.idx).value;
        if (v.shape.size() != 2 || v.shape[0] != 1)
            throw shape_error("stack_rows expects [1 x n] rows, got " + shape_str(v.shape));
        if (n < 0) n = v.shape[1];
        if (v.shape[1] != n)
            throw shape_error("stack_rows width mismatch: " + std::to_string(v.shape[1]) + " vs " +
                              std::to_string(n));
        rg = rg || node(r.idx).requires_grad;
    }
    int k = static_cast<int>(rows.size());
    Tensor out = Tensor::zeros({k, n});
    for (int i = 0; i < k; ++i) {
        const Tensor& v = node(rows[static_cast<std::size_t>(i)].idx).value;
        std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::size_t>(i) * n);
    }
    std::vector<Var> captured = rows;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([captured, n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       for (std::size_t i = 0; i < captured.size(); ++i) {
                           if (!t.node(captured[i].idx).requires_grad) continue;
                           Tensor& dr = t.grad_buffer(captured[i].idx);
                           for (int j = 0; j < n; ++j) dr.data[j] += g.data[i * n + j];
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::slice_rows(Var x, int row_begin, int row_end) {
    check(x, "slice_rows");
    const Tensor& xv = node(x.idx).value;
    if (xv.shape.size() != 2) throw shape_error("slice_rows expects rank 2, got " + shape_str(xv.shape));
    if (row_begin < 0 || row_end > xv.shape[0] || row_begin >= row_end)
        throw contract_error("slice_rows: bad range [" + std::to_string(row_begin) + ", " +
                             std::to_string(row_end) + ") for " + shape_str(xv.shape));
    int n = xv.shape[1];
    int k = row_end - row_begin;
    Tensor out = Tensor::zeros({k, n});
    std::copy(xv.data.begin() + static_cast<std::size_t>(row_begin) * n,
              xv.data.begin() + static_cast<std::size_t>(row_end) * n, out.data.begin());
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x, row_begin, k, n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       Tensor& dx = t.grad_buffer(x.idx);
                       std::size_t off = static_cast<std::size_t>(row_begin) * n;
                       for (std::size_t i = 0; i < static_cast<std::size_t>(k) * n; ++i)
                           dx.data[off + i] += g.data[i];
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::gather_rows(Var x, std::vector<int> row_ids) {
    check(x, "gather_rows");
    const Tensor& xv = node(x.idx).value;
    if (xv.shape.size() != 2) throw shape_error("gather_rows expects rank 2, got " + shape_str(xv.shape));
    if (row_ids.empty()) throw contract_error("gather_rows: empty index list");
    int rows = xv.shape[0], n = xv.shape[1];
    for (int id : row_ids)
        if (id < 0 || id >= rows)
            throw contract_error("gather_rows: index " + std::to_string(id) + " out of range [0, " +
                                 std::to_string(rows) + ")");
    int k = static_cast<int>(row_ids.size());
    Tensor out = Tensor::zeros({k, n});
    for (int i = 0; i < k; ++i)
        std::copy(xv.data.begin() + static_cast<std::size_t>(row_ids[static_cast<std::size_t>(i)]) * n,
                  xv.data.begin() + static_cast<std::size_t>(row_ids[static_cast<std::size_t>(i)] + 1) * n,
                  out.data.begin() + static_cast<std::size_t>(i) * n);
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x, row_ids = std::move(row_ids), n](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (std::size_t i = 0; i < row_ids.size(); ++i) {
                           std::size_t dst = static_cast<std::size_t>(row_ids[i]) * n;
                           std::size_t src = i * n;
                           for (int j = 0; j < n; ++j) dx.data[dst + j] += g.data[src + j];
                       }
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::pick_entries(Var x, std::vector<std::pair<int, int>> entries) {
    check(x, "pick_entries");
    const Tensor& xv = node(x.idx).value;
    if (xv.shape.size() != 2) throw shape_error("pick_entries expects rank 2, got " + shape_str(xv.shape));
    if (entries.empty()) throw contract_error("pick_entries: empty index list");
    for (auto [r, c] : entries)
        if (r < 0 || r >= xv.shape[0] || c < 0 || c >= xv.shape[1])
            throw contract_error("pick_entries: (" + std::to_string(r) + ", " + std::to_string(c) +
                                 ") out of range for " + shape_str(xv.shape));
    int k = static_cast<int>(entries.size());
    Tensor out = Tensor::zeros({k});
    for (int i = 0; i < k; ++i)
        out.data[static_cast<std::size_t>(i)] =
            xv.at(entries[static_cast<std::size_t>(i)].first, entries[static_cast<std::size_t>(i)].second);
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x, entries = std::move(entries)](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (std::size_t i = 0; i < entries.size(); ++i)
                           dx.at(entries[i].first, entries[i].second) += g.data[i];
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::sum_all(Var x) {
    check(x, "sum_all");
    const Tensor& xv = node(x.idx).value;
    double s = 0.0;
    for (double v : xv.data) s += v;
    bool rg = node(x.idx).requires_grad;
    int idx = push(Tensor::scalar(s), rg,
                   rg ? std::function<void(Tape&, int)>([x](Tape& t, int self) {
                       double g = t.node(self).grad.data[0];
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (double& v : dx.data) v += g;
                   })
                      : nullptr);
    return Var{idx};
}

Var Tape::scale(Var x, double k) {
    check(x, "scale");
    Tensor out = node(x.idx).value;
    for (double& v : out.data) v *= k;
    bool rg = node(x.idx).requires_grad;
    int idx = push(std::move(out), rg,
                   rg ? std::function<void(Tape&, int)>([x, k](Tape& t, int self) {
                       const Tensor& g = t.node(self).grad;
                       Tensor& dx = t.grad_buffer(x.idx);
                       for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += k * g.data[i];
                   })
                      : nullptr);
    return Var{idx};
}

void Tape::backward(Var loss) {
    check(loss, "backward");
    const Node& ln = node(loss.idx);
    if (!ln.value.is_scalar())
        throw contract_error("backward: loss must be a scalar, got " + shape_str(ln.value.shape));
    if (!ln.requires_grad)
        throw contract_error("backward: loss does not depend on any requires_grad leaf");
    grad_buffer(loss.idx).data[0] = 1.0;
    for (int i = loss.idx; i >= 0; --i) {
        Node& n = node(i);
        if (!n.requires_grad || !n.grad_ready || !n.backprop) continue;
        n.backprop(*this, i);
    }
}

std::map<std::string, Tensor> Tape::gradients() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, idx] : named_leaves_) {
        const Node& n = node(idx);
        if (!n.requires_grad) continue;
        out[name] = n.grad_ready ? n.grad : Tensor::zeros(n.value.shape);
    }
    return out;
}

} // namespace hashgen
