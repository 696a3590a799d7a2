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

#include "beamadv/autodiff.hpp"

#include "beamadv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace beamadv
{

namespace
{

std::string shape(const Matrix &m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void add_into(Matrix &acc, const Matrix &delta)
{
    if (acc.empty())
    {
        acc = delta;
        return;
    }
    auto a = acc.values();
    auto d = delta.values();
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] += d[i];
}

} // namespace

NodeId CompGraph::push(Node node)
{
    nodes_.push_back(std::move(node));
    values_.emplace_back();
    evaluated_ = false;
    return nodes_.size() - 1;
}

void CompGraph::check_operand(NodeId id) const
{
    require(id < nodes_.size(), ErrorCode::invalid_argument,
            "operand node " + std::to_string(id) + " does not exist yet");
    require(nodes_[id].kind != OpKind::mse_loss, ErrorCode::invalid_argument,
            "the loss node cannot feed another node");
}

NodeId CompGraph::input(std::size_t width, std::string label)
{
    require(!input_node_, ErrorCode::invalid_argument, "graph already has an input node");
    Node n{OpKind::input, std::move(label)};
    n.width = width;
    input_node_ = push(std::move(n));
    return *input_node_;
}

NodeId CompGraph::parameter(std::size_t index, std::string label)
{
    Node n{OpKind::parameter, std::move(label)};
    n.param_index = index;
    parameter_count_ = std::max(parameter_count_, index + 1);
    return push(std::move(n));
}

NodeId CompGraph::matmul(NodeId lhs, NodeId rhs, std::string label)
{
    check_operand(lhs);
    check_operand(rhs);
    Node n{OpKind::matmul, std::move(label)};
    n.lhs = lhs;
    n.rhs = rhs;
    return push(std::move(n));
}

NodeId CompGraph::bias_add(NodeId value, NodeId bias, std::string label)
{
    check_operand(value);
    check_operand(bias);
    Node n{OpKind::bias_add, std::move(label)};
    n.lhs = value;
    n.rhs = bias;
    return push(std::move(n));
}

NodeId CompGraph::relu(NodeId value, std::string label)
{
    check_operand(value);
    Node n{OpKind::relu, std::move(label)};
    n.lhs = value;
    return push(std::move(n));
}

NodeId CompGraph::tanh(NodeId value, std::string label)
{
    check_operand(value);
    Node n{OpKind::tanh, std::move(label)};
    n.lhs = value;
    return push(std::move(n));
}

NodeId CompGraph::softmax(NodeId value, double temperature, std::string label)
{
    check_operand(value);
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::invalid_argument,
            "softmax temperature must be positive and finite");
    Node n{OpKind::softmax, std::move(label)};
    n.lhs = value;
    n.temperature = temperature;
    return push(std::move(n));
}

NodeId CompGraph::mse_loss(NodeId prediction, LossReduction reduction)
{
    check_operand(prediction);
    require(!loss_node_, ErrorCode::invalid_argument, "graph already has a loss node");
    Node n{OpKind::mse_loss, "mse"};
    n.lhs = prediction;
    n.reduction = reduction;
    loss_node_ = push(std::move(n));
    output_node_ = prediction;
    return *loss_node_;
}

void CompGraph::set_output(NodeId node)
{
    check_operand(node);
    output_node_ = node;
}

void CompGraph::set_temperature(NodeId softmax_node, double temperature)
{
    require(softmax_node < nodes_.size() && nodes_[softmax_node].kind == OpKind::softmax,
            ErrorCode::invalid_argument, "set_temperature: node is not a softmax");
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::invalid_argument,
            "softmax temperature must be positive and finite");
    nodes_[softmax_node].temperature = temperature;
    evaluated_ = false;
}

const Matrix &CompGraph::value(NodeId node) const
{
    require(node < nodes_.size(), ErrorCode::invalid_argument, "no such node");
    require(evaluated_, ErrorCode::state, "graph has not been evaluated");
    return operand(node);
}

const Matrix &CompGraph::operand(NodeId node) const
{
    if (nodes_[node].kind == OpKind::parameter)
        return bound_params_[nodes_[node].param_index];
    return values_[node];
}

Matrix softmax_rows(const Matrix &logits, double temperature)
{
    require(temperature > 0.0, ErrorCode::invalid_argument, "softmax temperature must be positive");
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r)
    {
        auto z = logits.row(r);
        auto p = out.row(r);
        const double zmax = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j)
        {
            p[j] = std::exp((z[j] - zmax) / temperature);
            total += p[j];
        }
        for (double &v : p)
            v /= total;
    }
    return out;
}

CompGraph::ForwardResult CompGraph::forward(std::span<const Matrix> parameters, const Matrix &inputs,
                                            const Matrix *target)
{
    require(input_node_.has_value(), ErrorCode::state, "graph has no input node");
    require(parameters.size() >= parameter_count_, ErrorCode::invalid_argument,
            "graph needs " + std::to_string(parameter_count_) + " parameters, got " +
                std::to_string(parameters.size()));
    evaluated_ = false;
    bound_params_ = parameters;
    target_ = target;

    for (NodeId id = 0; id < nodes_.size(); ++id)
    {
        const Node &n = nodes_[id];
        Matrix &out = values_[id];
        switch (n.kind)
        {
        case OpKind::input:
            require(inputs.cols() == n.width, ErrorCode::dimension_mismatch,
                    "node '" + n.label + "': expected " + std::to_string(n.width) +
                        " input columns, got " + std::to_string(inputs.cols()));
            out = inputs;
            break;
        case OpKind::parameter:
            out = Matrix();
            break;
        case OpKind::matmul: {
            const Matrix &a = operand(n.lhs);
            const Matrix &b = operand(n.rhs);
            require(a.cols() == b.rows(), ErrorCode::dimension_mismatch,
                    "node '" + n.label + "': cannot multiply " + shape(a) + " by " + shape(b));
            out = beamadv::matmul(a, b);
            break;
        }
        case OpKind::bias_add: {
            const Matrix &a = operand(n.lhs);
            const Matrix &b = operand(n.rhs);
            require(b.rows() == 1 && b.cols() == a.cols(), ErrorCode::dimension_mismatch,
                    "node '" + n.label + "': bias " + shape(b) + " does not fit " + shape(a));
            out = a;
            for (std::size_t r = 0; r < out.rows(); ++r)
            {
                auto row = out.row(r);
                for (std::size_t c = 0; c < row.size(); ++c)
                    row[c] += b(0, c);
            }
            break;
        }
        case OpKind::relu:
            out = operand(n.lhs);
            for (double &v : out.values())
                v = v > 0.0 ? v : 0.0;
            break;
        case OpKind::tanh:
            out = operand(n.lhs);
            for (double &v : out.values())
                v = std::tanh(v);
            break;
        case OpKind::softmax:
            out = softmax_rows(operand(n.lhs), n.temperature);
            break;
        case OpKind::mse_loss: {
            if (!target)
            {
                out = Matrix();
                break;
            }
            const Matrix &pred = operand(n.lhs);
            require(target->rows() == pred.rows() && target->cols() == pred.cols(),
                    ErrorCode::dimension_mismatch,
                    "node 'mse': target " + shape(*target) + " does not match prediction " + shape(pred));
            require(pred.rows() > 0 && pred.cols() > 0, ErrorCode::dimension_mismatch,
                    "node 'mse': empty prediction");
            double total = 0.0;
            const double inv_cols = 1.0 / static_cast<double>(pred.cols());
            for (std::size_t r = 0; r < pred.rows(); ++r)
            {
                double row_sum = 0.0;
                auto p = pred.row(r);
                auto t = target->row(r);
                for (std::size_t c = 0; c < p.size(); ++c)
                {
                    const double d = p[c] - t[c];
                    row_sum += d * d;
                }
                total += row_sum * inv_cols;
            }
            if (n.reduction == LossReduction::mean)
                total /= static_cast<double>(pred.rows());
            out = Matrix(1, 1, total);
            loss_value_ = total;
            break;
        }
        }
    }
    evaluated_ = true;

    const NodeId out_id = output_node_.value_or(nodes_.size() - 1);
    std::optional<double> loss;
    if (loss_node_ && target)
        loss = loss_value_;
    return {loss, operand(out_id)};
}

Gradients CompGraph::backward(bool parameter_gradients, bool input_gradient)
{
    require(evaluated_, ErrorCode::state, "backward called before forward");
    require(loss_node_.has_value(), ErrorCode::state, "graph has no loss node");
    require(target_ != nullptr, ErrorCode::state, "backward needs a target bound in forward");

    // Which nodes need a gradient at all: those on a path from the input (or a
    // parameter, when requested) to the loss.
    std::vector<char> needs(nodes_.size(), 0);
    for (NodeId id = 0; id < nodes_.size(); ++id)
    {
        const Node &n = nodes_[id];
        switch (n.kind)
        {
        case OpKind::input: needs[id] = input_gradient ? 1 : 0; break;
        case OpKind::parameter: needs[id] = parameter_gradients ? 1 : 0; break;
        case OpKind::matmul:
        case OpKind::bias_add: needs[id] = needs[n.lhs] || needs[n.rhs]; break;
        default: needs[id] = needs[n.lhs]; break;
        }
    }

    std::vector<Matrix> grads(nodes_.size());
    const NodeId loss_id = *loss_node_;
    {
        const Node &n = nodes_[loss_id];
        const Matrix &pred = operand(n.lhs);
        double scale = 2.0 / static_cast<double>(pred.cols());
        if (n.reduction == LossReduction::mean)
            scale /= static_cast<double>(pred.rows());
        Matrix g(pred.rows(), pred.cols());
        auto gv = g.values();
        auto pv = pred.values();
        auto tv = target_->values();
        for (std::size_t i = 0; i < gv.size(); ++i)
            gv[i] = scale * (pv[i] - tv[i]);
        if (needs[n.lhs])
            grads[n.lhs] = std::move(g);
    }

    for (NodeId id = loss_id; id-- > 0;)
    {
        const Node &n = nodes_[id];
        if (!needs[id] || grads[id].empty())
            continue;
        const Matrix &g = grads[id];
        switch (n.kind)
        {
        case OpKind::input:
        case OpKind::parameter:
        case OpKind::mse_loss:
            break;
        case OpKind::matmul:
            if (needs[n.lhs])
                add_into(grads[n.lhs], matmul_nt(g, operand(n.rhs)));
            if (needs[n.rhs])
                add_into(grads[n.rhs], matmul_tn(operand(n.lhs), g));
            break;
        case OpKind::bias_add:
            if (needs[n.lhs])
                add_into(grads[n.lhs], g);
            if (needs[n.rhs])
            {
                Matrix gb(1, g.cols());
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        gb(0, c) += g(r, c);
                add_into(grads[n.rhs], gb);
            }
            break;
        case OpKind::relu: {
            // Subgradient at exactly zero is zero.
            Matrix d = g;
            auto dv = d.values();
            auto xv = operand(n.lhs).values();
            for (std::size_t i = 0; i < dv.size(); ++i)
                if (!(xv[i] > 0.0))
                    dv[i] = 0.0;
            add_into(grads[n.lhs], d);
            break;
        }
        case OpKind::tanh: {
            Matrix d = g;
            auto dv = d.values();
            auto yv = values_[id].values();
            for (std::size_t i = 0; i < dv.size(); ++i)
                dv[i] *= 1.0 - yv[i] * yv[i];
            add_into(grads[n.lhs], d);
            break;
        }
        case OpKind::softmax: {
            const Matrix &p = values_[id];
            Matrix d(p.rows(), p.cols());
            for (std::size_t r = 0; r < p.rows(); ++r)
            {
                auto pr = p.row(r);
                auto gr = g.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < pr.size(); ++c)
                    dot += gr[c] * pr[c];
                auto dr = d.row(r);
                for (std::size_t c = 0; c < pr.size(); ++c)
                    dr[c] = pr[c] * (gr[c] - dot) / n.temperature;
            }
            add_into(grads[n.lhs], d);
            break;
        }
        }
    }

    Gradients out;
    const NodeId in_id = *input_node_;
    if (input_gradient)
        out.input = grads[in_id].empty() ? Matrix(values_[in_id].rows(), values_[in_id].cols()) : std::move(grads[in_id]);
    if (parameter_gradients)
    {
        out.parameters.resize(bound_params_.size());
        for (std::size_t i = 0; i < bound_params_.size(); ++i)
            out.parameters[i] = Matrix(bound_params_[i].rows(), bound_params_[i].cols());
        for (NodeId id = 0; id < nodes_.size(); ++id)
            if (nodes_[id].kind == OpKind::parameter && !grads[id].empty())
                add_into(out.parameters[nodes_[id].param_index], grads[id]);
    }
    return out;
}

Matrix finite_difference_gradient(const std::function<long double(const Matrix &)> &f, const Matrix &x,
                                  double step)
{
    require(step > 0.0, ErrorCode::invalid_argument, "finite-difference step must be positive");
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double original = probe.values()[i];
        const double hi = original + step;
        const double lo = original - step;
        probe.values()[i] = hi;
        const long double up = f(probe);
        probe.values()[i] = lo;
        const long double down = f(probe);
        probe.values()[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down))
            fail(ErrorCode::numeric, "non-finite function value probing coordinate (" +
                                         std::to_string(i / std::max<std::size_t>(x.cols(), 1)) + ", " +
                                         std::to_string(i % std::max<std::size_t>(x.cols(), 1)) + ")");
        grad.values()[i] = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
    }
    return grad;
}

} // namespace beamadv
