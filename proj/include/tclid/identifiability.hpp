// Operator-level identifiability analysis.
//
// For an observable set {O_m} the adjoint-dissipator image of O_m is the
// operator array [L_1^*(O_m), ..., L_N^*(O_m)]. Its rank over the reals
// (number of linearly independent arrays) is a necessary condition for
// recovering the N rates. When the rank falls short, the dependent part of
// a generation is differentiated once more through L_0^*:
//     next = L_0^*(dependent) - V L_0^*(independent),
// where V expresses the dependent arrays in terms of the independent ones.
// The expectations of `next` are rate-free combinations of output
// derivatives. A generation without a dependent part continues with
// L_0^* applied to the whole generation.

#pragma once

#include "tclid/identifier.hpp"
#include "tclid/model.hpp"
#include "tclid/propagator.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tclid {

/// Singular values below this fraction of the scale count as zero.
inline constexpr double kRankTolerance = 1e-9;

struct RankReport {
    int rank = 0;
    /// Greedy pivoted selection: first observables (in order) that add rank.
    std::vector<std::size_t> independent_indices;
    RealVector gram_singular_values; // descending
};

/// Real vectorized image array of one observable, length 2 N d^2 (real and
/// imaginary parts of every vec(L_n^*(O))).
RealVector image_array(const TclModel& model, const Operator& observable);

RankReport operator_rank(const TclModel& model, std::span<const Operator> observables);

enum class ExtensionPath {
    Terminal,   // cumulative rank reached N; no further generation
    Dependency, // next = L_0^*(dependent) - V L_0^*(independent)
    Adjoin,     // no dependent part: next = L_0^*(generation)
    Exhausted,  // all operators vanish; nothing left to extend
};

std::string to_string(ExtensionPath path);

struct Generation {
    std::vector<Operator> operators;
    std::vector<std::size_t> independent;
    std::vector<std::size_t> dependent;
    /// dependent.size() x independent.size(): image(dependent_r) = sum_c V(r,c) image(independent_c).
    RealMatrix v;
    int rank = 0;            // rank within this generation
    int cumulative_rank = 0; // rank of all generations up to this one
    ExtensionPath path = ExtensionPath::Terminal;
};

struct ExtensionStep {
    Generation current;             // split of the input generation (cumulative_rank = its own rank)
    std::vector<Operator> next;
};

/// Splits `generation` into independent/dependent parts, solves for V and
/// builds the next generation. Throws NumericalError if the V solve leaves
/// a residual above 1e-8 (relative to the dependent array norm).
ExtensionStep extend_observables(const TclModel& model, std::span<const Operator> generation);

struct ExtensionCertificate {
    std::vector<std::string> base_names; // names of generation-1 observables
    std::vector<Generation> generations;
    std::optional<int> alpha;            // relative degree; empty = not invertible

    bool invertible() const { return alpha.has_value(); }
};

/// Iterates extend_observables until the cumulative image rank reaches N
/// (alpha = number of generations) or max_generations is exhausted.
/// max_generations <= 0 means d^2.
ExtensionCertificate relative_degree(const TclModel& model, std::span<const Operator> observables,
                                     int max_generations = 0, std::vector<std::string> base_names = {});

struct ExtendedSystem {
    RealMatrix w;
    RealVector b;
    std::vector<int> row_generation; // 1-based generation of each row
};

/// Stacked estimator rows over every generation of the certificate (zero
/// operators excluded):
///     W' row = <L_gamma^*(P)>_rho,   b' row = D f_P - <L_0^*(P)>_rho,
/// where f_P is the measured value of P (generation 1: the traces;
/// dependency generations: forward differences combined through V) and D
/// the forward difference at sample k. states[0] is rho(k dt). Adjoin
/// generations are not rate-free; their values subtract <L_gamma^*(.)> at
/// states[j] times rate_hint, so they need states for offsets
/// 0..generations-1 and an N-entry rate_hint.
/// Throws std::out_of_range when the traces are too short for the
/// required difference order.
ExtendedSystem extended_w_b(const TclModel& model, const ExtensionCertificate& certificate, const TraceSet& traces,
                            std::size_t k, std::span<const Operator> states,
                            std::span<const double> rate_hint = {});

} // namespace tclid
