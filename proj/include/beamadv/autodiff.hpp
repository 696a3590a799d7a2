// SPDX-License-Identifier: Apache-2.0
//
// beamadv: adversarial robustness laboratory for mmWave beam prediction
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef BEAMADV_AUTODIFF_HPP
#define BEAMADV_AUTODIFF_HPP

#include "beamadv/matrix.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace beamadv
{

using NodeId = std::size_t;

enum class OpKind
{
    input,
    parameter,
    matmul,
    bias_add,
    relu,
    tanh,
    softmax,
    mse_loss
};

enum class LossReduction
{
    /// Mean over every element of the batch (training objective).
    mean,
    /// Sum over rows of each row's mean squared error. Row i's input gradient
    /// then depends on row i alone, which is what per-sample attacks need.
    row_sum
};

struct Gradients
{
    /// One entry per bound parameter, same shapes. Empty when not requested.
    std::vector<Matrix> parameters;
    Matrix input;
};

/// A reverse-mode computation graph over batch matrices.
///
/// Nodes are appended in topological order, so the graph is acyclic by
/// construction. Parameters are referenced by index into the span passed to
/// forward(); the graph never owns weights. An instance caches activations
/// and is meant for one thread at a time.
class CompGraph
{
public:
    NodeId input(std::size_t width, std::string label = "input");
    NodeId parameter(std::size_t index, std::string label);
    NodeId matmul(NodeId lhs, NodeId rhs, std::string label);
    /// Adds a 1 x n row to every row of the operand.
    NodeId bias_add(NodeId value, NodeId bias, std::string label);
    NodeId relu(NodeId value, std::string label);
    NodeId tanh(NodeId value, std::string label);
    /// Row-wise softmax(z / temperature).
    NodeId softmax(NodeId value, double temperature, std::string label);
    /// Squared-error loss between `prediction` and the target given to forward().
    /// The prediction node becomes the graph output.
    NodeId mse_loss(NodeId prediction, LossReduction reduction = LossReduction::mean);

    void set_output(NodeId node);
    void set_temperature(NodeId softmax_node, double temperature);

    struct ForwardResult
    {
        /// Present when a target was bound and the graph has a loss node.
        std::optional<double> loss;
        const Matrix &output;
    };

    /// Evaluates every node and caches the activations. Throws a
    /// dimension_mismatch error naming the offending node on shape errors.
    /// `parameters` and `target` are referenced, not copied, until the next
    /// forward() call.
    ForwardResult forward(std::span<const Matrix> parameters, const Matrix &inputs,
                          const Matrix *target = nullptr);

    /// Reverse sweep from the loss node of the last forward() call. Either
    /// half of the result can be skipped; skipped parts come back empty.
    Gradients backward(bool parameter_gradients = true, bool input_gradient = true);

    const Matrix &value(NodeId node) const;
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t parameter_count() const noexcept { return parameter_count_; }

private:
    struct Node
    {
        OpKind kind;
        std::string label;
        NodeId lhs = 0;
        NodeId rhs = 0;
        std::size_t width = 0;      // input width
        std::size_t param_index = 0;
        double temperature = 1.0;
        LossReduction reduction = LossReduction::mean;
    };

    NodeId push(Node node);
    const Matrix &operand(NodeId node) const;
    void check_operand(NodeId id) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> values_;
    std::optional<NodeId> input_node_;
    std::optional<NodeId> loss_node_;
    std::optional<NodeId> output_node_;
    std::size_t parameter_count_ = 0;

    // per-forward state
    std::span<const Matrix> bound_params_;
    const Matrix *target_ = nullptr;
    bool evaluated_ = false;
    double loss_value_ = 0.0;
};

/// Row-wise softmax of z / temperature with max subtraction.
Matrix softmax_rows(const Matrix &logits, double temperature);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
/// f may evaluate in extended precision; the difference is formed in long
/// double over the exactly representable step (x + h) - (x - h).
/// Throws a numeric error naming the coordinate if f returns a non-finite value.
Matrix finite_difference_gradient(const std::function<long double(const Matrix &)> &f, const Matrix &x,
                                  double step);

} // namespace beamadv

#endif
