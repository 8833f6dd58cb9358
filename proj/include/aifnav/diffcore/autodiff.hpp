#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aifnav/diffcore/tensor.hpp"

namespace aifnav::ag {

struct Node;
using Var = std::shared_ptr<Node>;

// One recorded forward op. Inputs always precede the node they feed, so a
// reverse walk over the recording order is a valid backward schedule.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily; exactly zero for off-path parameters
    bool requires_grad = false;
    bool is_param = false;
    std::string name;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;  // accumulates node.grad into parents

    Tensor& ensure_grad() {
        if (!grad.defined()) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

// Thread-local switch: with grads disabled, ops return plain value nodes and
// retain no parents, so long inference rollouts stay O(1) in graph memory.
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
    NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev_); }

private:
    bool prev_;
};

inline Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

inline Var parameter(Tensor v, std::string name = "") {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    n->is_param = true;
    n->name = std::move(name);
    n->grad = Tensor::zeros(n->value.shape());
    return n;
}

// Creates the output node for an op; wires parents and the backward closure
// only when some input needs a gradient and grad mode is on.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse-mode sweep from a scalar loss. Each reachable node is visited
// exactly once; parameters not on the loss path keep their zero gradient.
void backward(const Var& loss);

// Named parameter registry shared by the network modules.
class ParamSet {
public:
    Var add(const std::string& name, Tensor init) {
        auto p = parameter(std::move(init), name);
        params_.push_back(p);
        return p;
    }
    const std::vector<Var>& all() const { return params_; }

    void zero_grad() {
        for (auto& p : params_) {
            Tensor& g = p->ensure_grad();
            for (int64_t i = 0; i < g.size(); ++i) g[i] = 0.0f;
        }
    }

    int64_t count() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p->value.size();
        return n;
    }

private:
    std::vector<Var> params_;
};

}  // namespace aifnav::ag
