#include "ewpf/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ewpf {

namespace {

#ifndef NDEBUG
void debug_check_finite(const detail::TensorNode& node) {
    for (double v : node.value) assert(std::isfinite(v) && "non-finite value after forward op");
}
#define EWPF_CHECK_FINITE(node) debug_check_finite(*(node))
#else
#define EWPF_CHECK_FINITE(node) ((void)0)
#endif

std::shared_ptr<detail::TensorNode> make_node(Shape shape, std::vector<double> value) {
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    return node;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
}

void check_shape_valid(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " +
                                         shape_to_string(shape));
    }
}

Tensor finish(Tape& tape, std::shared_ptr<detail::TensorNode> node, bool inputs_require_grad,
              std::function<void()> backward_rule) {
    EWPF_CHECK_FINITE(node);
    if (tape.recording() && inputs_require_grad) {
        node->requires_grad = true;
        tape.record(node, std::move(backward_rule));
    }
    return Tensor::wrap(std::move(node));
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    s += ")";
    return s;
}

int shape_numel(const Shape& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

// ---- Tensor ----

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
    check_shape_valid(shape);
    int n = shape_numel(shape);
    auto node = make_node(std::move(shape), std::vector<double>(static_cast<size_t>(n), fill));
    node->requires_grad = requires_grad;
    return Tensor::wrap(std::move(node));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> data, bool requires_grad) {
    check_shape_valid(shape);
    if (shape_numel(shape) != static_cast<int>(data.size())) {
        throw DimensionError("from_vector: shape " + shape_to_string(shape) + " expects " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(data.size()));
    }
    auto node = make_node(std::move(shape), std::move(data));
    node->requires_grad = requires_grad;
    return Tensor::wrap(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_vector({1}, {v}, requires_grad);
}

int Tensor::rows() const {
    if (rank() != 2) throw ContractError("rows(): tensor is not 2-D, shape " + shape_to_string(shape()));
    return node_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw ContractError("cols(): tensor is not 2-D, shape " + shape_to_string(shape()));
    return node_->shape[1];
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value(): tensor is not scalar, shape " + shape_to_string(shape()));
    return node_->value[0];
}

std::span<const double> Tensor::grad() const {
    if (node_->grad.empty()) throw ContractError("grad(): no gradient present");
    return node_->grad;
}

std::span<double> Tensor::grad_mut() {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    auto node = make_node(node_->shape, node_->value);
    return Tensor::wrap(std::move(node));
}

// ---- Tape ----

void Tape::record(std::shared_ptr<detail::TensorNode> output, std::function<void()> backward) {
    nodes_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " +
                            shape_to_string(loss.shape()));
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output->grad.empty()) it->backward();
    }
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

// ---- ops ----

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul: expected 2-D operands, got " + shape_to_string(a.shape()) +
                             " and " + shape_to_string(b.shape()));
    }
    const int m = a.rows(), k = a.cols(), n = b.cols();
    if (k != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (int i = 0; i < m; ++i) {
        double* crow = out.data() + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = pa[static_cast<size_t>(i) * k + p];
            const double* brow = pb + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    auto node = make_node({m, n}, std::move(out));
    auto an = a.node(), bn = b.node(), on = node;
    return finish(tape, node, a.requires_grad() || b.requires_grad(), [an, bn, on, m, k, n] {
        const double* g = on->grad.data();
        if (an->requires_grad) {
            an->ensure_grad();
            double* da = an->grad.data();
            const double* pb = bn->value.data();
            // dA[i,p] += sum_j g[i,j] * B[p,j]
            for (int i = 0; i < m; ++i) {
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* grow = g + static_cast<size_t>(i) * n;
                    const double* brow = pb + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                    da[static_cast<size_t>(i) * k + p] += s;
                }
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            double* db = bn->grad.data();
            const double* pa = an->value.data();
            // dB[p,j] += sum_i A[i,p] * g[i,j]
            for (int i = 0; i < m; ++i) {
                const double* grow = g + static_cast<size_t>(i) * n;
                for (int p = 0; p < k; ++p) {
                    const double av = pa[static_cast<size_t>(i) * k + p];
                    double* brow = db + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
            }
        }
    });
}

Tensor transpose(Tape& tape, const Tensor& x) {
    const int m = x.rows(), n = x.cols();
    std::vector<double> out(static_cast<size_t>(m) * n);
    const double* px = x.data().data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<size_t>(j) * m + i] = px[static_cast<size_t>(i) * n + j];
    auto node = make_node({n, m}, std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on, m, n] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const double* g = on->grad.data();
        double* dx = xn->grad.data();
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i)
                dx[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
    });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    const double* pb = b.data().data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += pb[i];
    auto node = make_node(a.shape(), std::move(out));
    auto an = a.node(), bn = b.node(), on = node;
    return finish(tape, node, a.requires_grad() || b.requires_grad(), [an, bn, on] {
        const auto& g = on->grad;
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i];
        }
    });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    const double* pb = b.data().data();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
    auto node = make_node(a.shape(), std::move(out));
    auto an = a.node(), bn = b.node(), on = node;
    return finish(tape, node, a.requires_grad() || b.requires_grad(), [an, bn, on] {
        const auto& g = on->grad;
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) bn->grad[i] -= g[i];
        }
    });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    const double* pb = b.data().data();
    for (size_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
    auto node = make_node(a.shape(), std::move(out));
    auto an = a.node(), bn = b.node(), on = node;
    return finish(tape, node, a.requires_grad() || b.requires_grad(), [an, bn, on] {
        const auto& g = on->grad;
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i] * an->value[i];
        }
    });
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v *= c;
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on, c] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i] * c;
    });
}

Tensor add_rowwise(Tape& tape, const Tensor& x, const Tensor& bias) {
    const int d = x.shape().back();
    if (bias.size() != d) {
        throw DimensionError("add_rowwise: bias length " + std::to_string(bias.size()) +
                             " does not match last dimension of " + shape_to_string(x.shape()));
    }
    std::vector<double> out(x.data().begin(), x.data().end());
    const double* pb = bias.data().data();
    const size_t slices = out.size() / static_cast<size_t>(d);
    for (size_t s = 0; s < slices; ++s)
        for (int j = 0; j < d; ++j) out[s * d + j] += pb[j];
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), bn = bias.node(), on = node;
    return finish(tape, node, x.requires_grad() || bias.requires_grad(), [xn, bn, on, d, slices] {
        const auto& g = on->grad;
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t s = 0; s < slices; ++s)
                for (int j = 0; j < d; ++j) bn->grad[static_cast<size_t>(j)] += g[s * d + j];
        }
    });
}

Tensor relu(Tape& tape, const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        // subgradient at exactly 0 is 0
        for (size_t i = 0; i < on->grad.size(); ++i)
            if (xn->value[i] > 0.0) xn->grad[i] += on->grad[i];
    });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    std::vector<double> out(x.size());
    for (int i = 0; i < x.size(); ++i) out[static_cast<size_t>(i)] = 1.0 / (1.0 + std::exp(-x.at(i)));
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < on->grad.size(); ++i) {
            double s = on->value[i];
            xn->grad[i] += on->grad[i] * s * (1.0 - s);
        }
    });
}

Tensor tanh_op(Tape& tape, const Tensor& x) {
    std::vector<double> out(x.size());
    for (int i = 0; i < x.size(); ++i) out[static_cast<size_t>(i)] = std::tanh(x.at(i));
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < on->grad.size(); ++i) {
            double t = on->value[i];
            xn->grad[i] += on->grad[i] * (1.0 - t * t);
        }
    });
}

Tensor softmax_lastdim(Tape& tape, const Tensor& x) {
    const int d = x.shape().back();
    std::vector<double> out(x.data().begin(), x.data().end());
    const size_t slices = out.size() / static_cast<size_t>(d);
    for (size_t s = 0; s < slices; ++s) {
        double* row = out.data() + s * d;
        double mx = row[0];
        for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        double total = 0.0;
        for (int j = 0; j < d; ++j) {
            row[j] = std::exp(row[j] - mx);
            total += row[j];
        }
        for (int j = 0; j < d; ++j) row[j] /= total;
    }
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on, d, slices] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t s = 0; s < slices; ++s) {
            const double* sm = on->value.data() + s * d;
            const double* g = on->grad.data() + s * d;
            double dot = 0.0;
            for (int j = 0; j < d; ++j) dot += g[j] * sm[j];
            double* dx = xn->grad.data() + s * d;
            for (int j = 0; j < d; ++j) dx[j] += sm[j] * (g[j] - dot);
        }
    });
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
    const int d = x.shape().back();
    if (gain.size() != d || bias.size() != d) {
        throw DimensionError("layer_norm: gain/bias length " + std::to_string(gain.size()) + "/" +
                             std::to_string(bias.size()) + " does not match last dimension of " +
                             shape_to_string(x.shape()));
    }
    const size_t slices = static_cast<size_t>(x.size()) / d;
    std::vector<double> out(static_cast<size_t>(x.size()));
    // normalized values and 1/sqrt(var+eps) are saved for the backward pass
    auto saved_y = std::make_shared<std::vector<double>>(out.size());
    auto saved_inv_std = std::make_shared<std::vector<double>>(slices);
    const double* px = x.data().data();
    const double* pg = gain.data().data();
    const double* pb = bias.data().data();
    for (size_t s = 0; s < slices; ++s) {
        const double* row = px + s * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            double c = row[j] - mean;
            var += c * c;
        }
        var /= d;
        double inv_std = 1.0 / std::sqrt(var + eps);
        (*saved_inv_std)[s] = inv_std;
        for (int j = 0; j < d; ++j) {
            double y = (row[j] - mean) * inv_std;
            (*saved_y)[s * d + j] = y;
            out[s * d + j] = pg[j] * y + pb[j];
        }
    }
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), gn = gain.node(), bn = bias.node(), on = node;
    bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    return finish(tape, node, rg, [xn, gn, bn, on, saved_y, saved_inv_std, d, slices] {
        const auto& g = on->grad;
        const auto& y = *saved_y;
        if (gn->requires_grad) {
            gn->ensure_grad();
            for (size_t s = 0; s < slices; ++s)
                for (int j = 0; j < d; ++j) gn->grad[static_cast<size_t>(j)] += g[s * d + j] * y[s * d + j];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t s = 0; s < slices; ++s)
                for (int j = 0; j < d; ++j) bn->grad[static_cast<size_t>(j)] += g[s * d + j];
        }
        if (xn->requires_grad) {
            xn->ensure_grad();
            const double* pg = gn->value.data();
            for (size_t s = 0; s < slices; ++s) {
                double mean_dy = 0.0, mean_dy_y = 0.0;
                for (int j = 0; j < d; ++j) {
                    double dy = g[s * d + j] * pg[j];
                    mean_dy += dy;
                    mean_dy_y += dy * y[s * d + j];
                }
                mean_dy /= d;
                mean_dy_y /= d;
                double inv_std = (*saved_inv_std)[s];
                for (int j = 0; j < d; ++j) {
                    double dy = g[s * d + j] * pg[j];
                    xn->grad[s * d + j] += inv_std * (dy - mean_dy - y[s * d + j] * mean_dy_y);
                }
            }
        }
    });
}

Tensor dropout(Tape& tape, const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw ConfigError("dropout: p must be in [0, 1), got " + std::to_string(p));
    }
    if (!training || p == 0.0) return x;  // identity, nothing recorded
    const double keep_scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(static_cast<size_t>(x.size()));
    std::vector<double> out(static_cast<size_t>(x.size()));
    for (int i = 0; i < x.size(); ++i) {
        double m = rng.uniform() < p ? 0.0 : keep_scale;
        (*mask)[static_cast<size_t>(i)] = m;
        out[static_cast<size_t>(i)] = x.at(i) * m;
    }
    auto node = make_node(x.shape(), std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on, mask] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i] * (*mask)[i];
    });
}

Tensor sum(Tape& tape, const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    auto node = make_node({1}, {total});
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        double g = on->grad[0];
        for (double& dv : xn->grad) dv += g;
    });
}

Tensor slice_cols(Tape& tape, const Tensor& x, int col0, int ncols) {
    const int m = x.rows(), n = x.cols();
    if (col0 < 0 || ncols <= 0 || col0 + ncols > n) {
        throw DimensionError("slice_cols: range [" + std::to_string(col0) + ", " +
                             std::to_string(col0 + ncols) + ") out of bounds for " +
                             shape_to_string(x.shape()));
    }
    std::vector<double> out(static_cast<size_t>(m) * ncols);
    const double* px = x.data().data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < ncols; ++j)
            out[static_cast<size_t>(i) * ncols + j] = px[static_cast<size_t>(i) * n + col0 + j];
    auto node = make_node({m, ncols}, std::move(out));
    auto xn = x.node(), on = node;
    return finish(tape, node, x.requires_grad(), [xn, on, m, n, col0, ncols] {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const double* g = on->grad.data();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < ncols; ++j)
                xn->grad[static_cast<size_t>(i) * n + col0 + j] += g[static_cast<size_t>(i) * ncols + j];
    });
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    const int m = parts[0].rows();
    int total_cols = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        if (p.rows() != m) {
            throw DimensionError("concat_cols: row count mismatch " + shape_to_string(p.shape()));
        }
        total_cols += p.cols();
        rg = rg || p.requires_grad();
    }
    std::vector<double> out(static_cast<size_t>(m) * total_cols);
    int col = 0;
    for (const Tensor& p : parts) {
        const int pc = p.cols();
        const double* pp = p.data().data();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < pc; ++j)
                out[static_cast<size_t>(i) * total_cols + col + j] = pp[static_cast<size_t>(i) * pc + j];
        col += pc;
    }
    auto node = make_node({m, total_cols}, std::move(out));
    std::vector<std::shared_ptr<detail::TensorNode>> part_nodes;
    part_nodes.reserve(parts.size());
    for (const Tensor& p : parts) part_nodes.push_back(p.node());
    auto on = node;
    return finish(tape, node, rg, [part_nodes, on, m, total_cols] {
        const double* g = on->grad.data();
        int col = 0;
        for (const auto& pn : part_nodes) {
            const int pc = pn->shape[1];
            if (pn->requires_grad) {
                pn->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < pc; ++j)
                        pn->grad[static_cast<size_t>(i) * pc + j] +=
                            g[static_cast<size_t>(i) * total_cols + col + j];
            }
            col += pc;
        }
    });
}

Tensor stack(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("stack: no parts");
    const Shape inner = parts[0].shape();
    const size_t inner_n = static_cast<size_t>(shape_numel(inner));
    bool rg = false;
    for (const Tensor& p : parts) {
        if (p.shape() != inner) {
            throw DimensionError("stack: shape mismatch " + shape_to_string(p.shape()) + " vs " +
                                 shape_to_string(inner));
        }
        rg = rg || p.requires_grad();
    }
    Shape out_shape;
    out_shape.push_back(static_cast<int>(parts.size()));
    out_shape.insert(out_shape.end(), inner.begin(), inner.end());
    std::vector<double> out;
    out.reserve(parts.size() * inner_n);
    for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    auto node = make_node(std::move(out_shape), std::move(out));
    std::vector<std::shared_ptr<detail::TensorNode>> part_nodes;
    part_nodes.reserve(parts.size());
    for (const Tensor& p : parts) part_nodes.push_back(p.node());
    auto on = node;
    return finish(tape, node, rg, [part_nodes, on, inner_n] {
        const double* g = on->grad.data();
        for (size_t k = 0; k < part_nodes.size(); ++k) {
            const auto& pn = part_nodes[k];
            if (!pn->requires_grad) continue;
            pn->ensure_grad();
            for (size_t i = 0; i < inner_n; ++i) pn->grad[i] += g[k * inner_n + i];
        }
    });
}

// ---- ModelParameters ----

Tensor& ModelParameters::add(const std::string& name, Tensor tensor) {
    if (has(name)) throw ContractError("parameter name already used: " + name);
    tensor.set_requires_grad(true);
    items_.push_back({name, std::move(tensor)});
    return items_.back().tensor;
}

Tensor& ModelParameters::get(const std::string& name) {
    for (auto& p : items_)
        if (p.name == name) return p.tensor;
    throw ContractError("no such parameter: " + name);
}

const Tensor& ModelParameters::get(const std::string& name) const {
    for (const auto& p : items_)
        if (p.name == name) return p.tensor;
    throw ContractError("no such parameter: " + name);
}

bool ModelParameters::has(const std::string& name) const {
    for (const auto& p : items_)
        if (p.name == name) return true;
    return false;
}

int64_t ModelParameters::total_scalars() const {
    int64_t total = 0;
    for (const auto& p : items_) total += p.tensor.size();
    return total;
}

void ModelParameters::zero_grad() {
    for (auto& p : items_) p.tensor.zero_grad();
}

// ---- finite differences ----

double finite_diff_check(const std::function<Tensor(Tape&)>& f, ModelParameters& params,
                         double eps, int max_samples, Rng& rng) {
    params.zero_grad();
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);

    struct Entry {
        Tensor tensor;
        int index;
        double analytic;
    };
    std::vector<Entry> entries;
    for (auto& p : params.items()) {
        auto g = p.tensor.grad_mut();
        for (int i = 0; i < p.tensor.size(); ++i)
            entries.push_back({p.tensor, i, g[static_cast<size_t>(i)]});
    }
    if (entries.size() > static_cast<size_t>(max_samples)) {
        shuffle(entries, rng);
        entries.resize(static_cast<size_t>(max_samples));
    }

    auto eval = [&f]() {
        Tape t(false);
        return f(t).value();
    };

    double worst = 0.0;
    for (auto& e : entries) {
        double* slot = &e.tensor.data_mut()[static_cast<size_t>(e.index)];
        const double orig = *slot;
        *slot = orig + eps;
        const double up = eval();
        *slot = orig - eps;
        const double down = eval();
        *slot = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double rel = std::abs(e.analytic - numeric) /
                           (std::abs(e.analytic) + std::abs(numeric) + 1e-12);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace ewpf
