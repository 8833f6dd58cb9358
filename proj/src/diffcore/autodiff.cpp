#include "aifnav/diffcore/autodiff.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace aifnav::ag {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            if (p->requires_grad) {
                n->requires_grad = true;
                break;
            }
        }
    }
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

void backward(const Var& loss) {
    if (loss->value.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    Tensor::shape_str(loss->value.shape()));
    if (!loss->requires_grad) return;

    // Iterative post-order DFS: children before parents in `order`.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && !seen.count(parent)) {
                seen.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (!n->is_param) n->grad = Tensor();  // clear stale grads from prior sweeps
    loss->ensure_grad()[0] = 1.0f;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
    }
}

}  // namespace aifnav::ag
