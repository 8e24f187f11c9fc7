#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "faceanon/core/tensor.hpp"

namespace faceanon::ad {

/// Define-by-run reverse-mode graph node. Graphs are rebuilt per forward
/// pass; parameter leaves live across graphs and accumulate gradients until
/// explicitly cleared.
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool grad_live = false;  // grad tensor holds valid accumulation
    std::uint64_t id = 0;
    std::string name;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;

    Tensor<T>& ensure_grad() {
        if (!grad_live) {
            grad = Tensor<T>::zeros(value.shape());
            grad_live = true;
        }
        return grad;
    }

    void clear_grad() {
        grad = Tensor<T>();
        grad_live = false;
    }
};

template <typename T>
using Value = std::shared_ptr<Node<T>>;

inline std::uint64_t next_node_id() {
    static std::uint64_t counter = 0;
    return ++counter;
}

inline int& no_grad_depth() {
    thread_local int depth = 0;
    return depth;
}

/// While alive, newly created ops do not record backward functions: forward
/// passes become plain evaluation (used for the detached generator pass in
/// the discriminator step and for inference).
struct NoGradGuard {
    NoGradGuard() { ++no_grad_depth(); }
    ~NoGradGuard() { --no_grad_depth(); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
Value<T> constant(Tensor<T> v, std::string name = {}) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(v);
    n->id = next_node_id();
    n->name = std::move(name);
    return n;
}

/// Leaf that participates in backward (parameters, gradcheck probes).
template <typename T>
Value<T> leaf(Tensor<T> v, std::string name = {}) {
    auto n = constant(std::move(v), std::move(name));
    n->requires_grad = true;
    return n;
}

template <typename T>
Value<T> make_op(Tensor<T> value, std::vector<Value<T>> inputs,
                 std::function<void(Node<T>&)> backward_fn) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->id = next_node_id();
    if (no_grad_depth() == 0) {
        n->inputs = std::move(inputs);
        for (const auto& in : n->inputs)
            if (in->requires_grad) n->requires_grad = true;
        if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    }
    return n;
}

/// Reverse accumulation from a scalar root. Creation order is a topological
/// order of the DAG, so visiting reachable nodes by descending id is correct.
template <typename T>
void backward(const Value<T>& root) {
    require(root->value.numel() == 1, "autodiff", "backward root must be a scalar");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<Node<T>*> stack{root.get()};
    while (!stack.empty()) {
        Node<T>* n = stack.back();
        stack.pop_back();
        if (!n->requires_grad || !seen.insert(n).second) continue;
        order.push_back(n);
        for (const auto& in : n->inputs) stack.push_back(in.get());
    }
    std::sort(order.begin(), order.end(),
              [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });

    root->ensure_grad().fill(T(1));
    for (Node<T>* n : order) {
        if (n->backward_fn && n->grad_live) n->backward_fn(*n);
    }
}

}  // namespace faceanon::ad
