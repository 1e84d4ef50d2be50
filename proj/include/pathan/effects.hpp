#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathan/estimator.hpp"
#include "pathan/tracer.hpp"

namespace pathan {

struct EffectRow {
    std::string outcome;
    std::string determinant;
    std::optional<double> direct;
    std::optional<double> indirect;
    double total = 0.0;
    double r2 = 0.0; // of the outcome's equation
    bool determinant_significant = false;
};

using EffectsTable = std::vector<EffectRow>;

/// One row per (endogenous outcome, directed ancestor). Spurious traces do
/// not contribute; indirect is absent when no multi-step causal trace exists.
inline EffectsTable effects_table(const FittedModel &m) {
    EffectsTable table;
    const auto weights = m.weights();
    for (const auto &fit : m.fits) {
        for (const auto &det : m.graph.ancestors(fit.outcome)) {
            EffectRow row;
            row.outcome = fit.outcome;
            row.determinant = det;
            row.r2 = fit.r2;
            if (const auto *est = fit.find(det)) {
                row.direct = est->beta;
                row.determinant_significant = est->p < m.alpha;
            }
            for (const auto &t : enumerate_traces(weights, det, fit.outcome)) {
                if (t.kind == TraceClass::Indirect) row.indirect = row.indirect.value_or(0.0) + t.product;
            }
            row.total = row.direct.value_or(0.0) + row.indirect.value_or(0.0);
            table.push_back(row);
        }
    }
    return table;
}

struct VarianceExplained {
    double r2 = 0.0;
    double unexplained = 1.0;
};

inline VarianceExplained variance_explained(const FittedModel &m, const std::string &outcome) {
    const auto &fit = m.equation(outcome);
    return {fit.r2, 1.0 - fit.r2};
}

} // namespace pathan
