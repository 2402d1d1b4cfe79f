// Copyright 2026 The morphgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "morphgen/gradcheck.hpp"

#include "morphgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morphgen::tc {

bool GradCheckReport::passed() const
{
    return failure.empty() && !leaves.empty() &&
           std::all_of(leaves.begin(), leaves.end(), [](const LeafCheck& c) { return c.passed; });
}

double GradCheckReport::worst() const
{
    double w = 0.0;
    for (const auto& c : leaves) {
        w = std::max(w, c.max_rel_error);
    }
    return w;
}

GradCheckReport finite_diff_check(const Graph& graph, NodeId output, const Bindings& bindings,
                                  const GradCheckOptions& options, std::span<const NodeId> wrt)
{
    GradCheckReport report;
    if (!(options.epsilon > 0.0)) {
        report.failure = "epsilon must be positive";
        return report;
    }
    try {
        std::vector<NodeId> targets(wrt.begin(), wrt.end());
        if (targets.empty()) {
            targets = graph.trainable_leaves();
        }
        const GradientResult analytic = gradients(graph, output, bindings, targets);
        Rng rng(options.seed);

        for (const NodeId leaf : targets) {
            const Tensor* base = bindings.find(leaf);
            if (base == nullptr) {
                report.failure = "leaf " + std::to_string(leaf.index) + " is not bound";
                return report;
            }
            const Tensor& grad = analytic[leaf];
            std::vector<std::size_t> probe(base->size());
            std::iota(probe.begin(), probe.end(), std::size_t{0});
            if (options.max_elements != 0 && probe.size() > options.max_elements) {
                for (std::size_t i = 0; i < options.max_elements; ++i) {
                    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (probe.size() - i));
                    std::swap(probe[i], probe[j]);
                }
                probe.resize(options.max_elements);
            }

            Bindings shifted = bindings;
            Tensor work = *base;
            struct Probe {
                double central;
                double one_sided_gap;
            };
            auto probe_at = [&](std::size_t i, double eps) {
                const double original = work[i];
                work[i] = original + eps;
                shifted.bind(leaf, work);
                const double up = scalar_value(graph, output, shifted);
                work[i] = original - eps;
                shifted.bind(leaf, work);
                const double down = scalar_value(graph, output, shifted);
                work[i] = original;
                shifted.bind(leaf, work);
                const double forward = (up - analytic.value) / eps;
                const double backward = (analytic.value - down) / eps;
                return Probe{(up - down) / (2.0 * eps), std::abs(forward - backward)};
            };

            std::vector<Probe> first(probe.size());
            for (std::size_t p = 0; p < probe.size(); ++p) {
                first[p] = probe_at(probe[p], options.epsilon);
            }
            double scale = 0.0;
            for (std::size_t p = 0; p < probe.size(); ++p) {
                scale = std::max({scale, std::abs(first[p].central), std::abs(grad[probe[p]] * options.analytic_scale)});
            }
            auto rel_error = [&](double a, double n) {
                const double denom = std::max({std::abs(a), std::abs(n), 1e-3 * scale, 1e-12});
                return std::abs(a - n) / denom;
            };

            LeafCheck check;
            check.leaf = leaf;
            check.name = graph.node(leaf).name;
            check.elements_checked = probe.size();
            for (std::size_t p = 0; p < probe.size(); ++p) {
                const double a = grad[probe[p]] * options.analytic_scale;
                double err = rel_error(a, first[p].central);
                // One-sided slopes that disagree by more than the tolerance mean
                // the step straddles a kink; shrink it.
                Probe current = first[p];
                double eps = options.epsilon;
                for (std::size_t retry = 0; retry < options.kink_retries && err > options.tolerance &&
                                            rel_error(current.one_sided_gap, 0.0) > options.tolerance;
                     ++retry) {
                    eps /= 10.0;
                    current = probe_at(probe[p], eps);
                    err = rel_error(a, current.central);
                    ++check.kink_reprobes;
                }
                check.max_rel_error = std::max(check.max_rel_error, err);
            }
            check.passed = check.max_rel_error <= options.tolerance;
            report.leaves.push_back(std::move(check));
        }
    } catch (const std::exception& e) {
        report.failure = e.what();
    }
    return report;
}

} // namespace morphgen::tc
