// Inverse-system identification of damping-rate functions.
//
// Per sampling interval k the measured traces give the linear system
//     W_k gamma_k = b_k,
//     W_k(m,n) = tr[L_n^*(O_m) rho_k],
//     b_k(m)   = (y_m(k+1) - y_m(k)) / dt - tr[L_0^*(O_m) rho_k],
// solved in the least-squares sense by SVD. rho_k is the reconstructed state,
// advanced with the identified rates (closed loop). When W_k is nearly
// singular an observable from the pool may be swapped in.

#pragma once

#include "tclid/model.hpp"
#include "tclid/propagator.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tclid {

/// Heisenberg-picture images of one observable: L_0^*(O) and L_n^*(O), n = 1..N.
struct HeisenbergImages {
    Operator drift;
    std::vector<Operator> channels;
};

HeisenbergImages heisenberg_images(const TclModel& model, const Operator& observable);

/// Re tr[L_n^*(O) rho] for n = 1..N. Throws NumericalError if an imaginary
/// part exceeds 1e-10.
RealVector w_row(const HeisenbergImages& images, const Operator& rho);
/// Re tr[L_0^*(O) rho].
double drift_expectation(const HeisenbergImages& images, const Operator& rho);

/// M x N matrix W(m,n) = Re tr[L_n^*(O_m) rho].
RealMatrix build_w(const TclModel& model, const Operator& rho, std::span<const Operator> active);

/// b(m) = (y_m(k+1) - y_m(k)) / dt - Re tr[L_0^*(O_m) rho]; the traces are
/// looked up by name. Throws std::out_of_range unless 0 <= k < K.
RealVector build_b(const TraceSet& traces, std::size_t k, const TclModel& model, const Operator& rho,
                   std::span<const std::string> active_names, std::span<const Operator> active_ops);

struct RateSolve {
    RealVector gamma;
    RealVector singular_values; // descending
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double cond = 0.0;          // +inf when sigma_min == 0
    int rank = 0;               // singular values kept by the threshold
    bool rank_deficient = false;
    double residual = 0.0;      // ||W gamma - b||_2
};

/// Minimum-norm least-squares solution. Singular values below
/// sigma_threshold * sigma_max are dropped and flagged, not inverted.
/// Throws std::invalid_argument when M < N.
RateSolve solve_rates(const RealMatrix& w, const RealVector& b, double sigma_threshold);

struct SubstitutionResult {
    std::vector<std::string> active;
    bool changed = false;
    std::optional<std::size_t> row;  // index in active that was replaced
    std::string removed;
    std::string added;
    double sigma_before = 0.0;
    double sigma_after = 0.0;
    /// Set when no replacement brought sigma_min above the threshold.
    bool warning = false;
};

/// A replacement that leaves W near-singular is adopted only if it raises
/// sigma_min by at least this relative amount.
inline constexpr double kMinRepairGain = 0.05;

/// True when sigma_min < threshold * reference, or sigma_min == 0.
bool is_near_singular(double sigma_min, double threshold, double reference);

/// Greedy repair of a near-singular W. The weakest row is found by
/// leave-one-out (largest sigma_min of W without the row when M > N,
/// otherwise smallest distance of the row from the span of the others);
/// each inactive pool observable is tried in its place and the one
/// maximizing sigma_min is adopted. If no candidate for that row clears
/// the threshold the remaining rows are tried in order, and the best
/// improvement found is returned with `warning` set (the active set is
/// left unchanged when that improvement is below kMinRepairGain). sigma_min
/// never decreases. `reference` defaults to sigma_max of the current W.
/// Throws std::invalid_argument if the pool has no inactive candidate.
SubstitutionResult substitute(const ObservablePool& pool, const TclModel& model, const Operator& rho,
                              std::span<const std::string> active, double sigma_threshold,
                              std::optional<double> reference = std::nullopt);

struct StepDiagnostics {
    std::size_t k = 0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double cond = 0.0;
    RealVector singular_values;
    std::optional<double> det;      // square W only
    std::vector<std::string> active_names;
    bool substituted = false;
    double sigma_min_before = 0.0;  // before any substitution at this step
    bool repair_warning = false;
    bool rank_deficient = false;
    double residual = 0.0;
};

struct IdentificationResult {
    double dt = 0.0;
    RealMatrix gammas;              // N x K
    std::vector<Operator> states;   // K + 1 reconstructed states
    std::vector<StepDiagnostics> diagnostics;
    std::size_t substitution_count = 0;
};

struct IdentifyOptions {
    /// Relative singularity threshold. A step is near-singular when
    /// sigma_min(W_k) < sigma_threshold * max_{j<=k} sigma_max(W_j).
    double sigma_threshold = 1e-3;
    bool substitution = true;
    /// Centered moving-average window applied to the traces before
    /// differencing; 0 or 1 disables smoothing.
    int smoothing_window = 0;
    /// With substitution enabled, a repaired W whose sigma_min is at most
    /// rank_floor * reference is treated as irreparable.
    double rank_floor = 1e-10;
};

/// Irreparable rank deficiency at step k.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(std::size_t step, std::vector<double> sigma_history);
    std::size_t step() const { return step_; }
    const std::vector<double>& sigma_history() const { return sigma_history_; }

private:
    std::size_t step_;
    std::vector<double> sigma_history_;
};

/// The closed loop produced a non-finite rate or state at step k. partial()
/// holds the k + 1 rate samples and diagnostics computed so far (the last
/// one being the divergent step) and the states rho(0..k).
class DivergenceError : public NumericalError {
public:
    DivergenceError(std::size_t step, IdentificationResult partial, const std::string& what);
    std::size_t step() const { return step_; }
    const IdentificationResult& partial() const { return partial_; }

private:
    std::size_t step_;
    IdentificationResult partial_;
};

/// Centered moving average (window clipped at the ends).
TraceSet smooth_traces(const TraceSet& traces, int window);

/// Runs the closed-loop identification over all K intervals of `traces`,
/// starting from the active set of `pool` and the known state rho0.
IdentificationResult identify(const TclModel& model, const TraceSet& traces, const ObservablePool& pool,
                              const Operator& rho0, const IdentifyOptions& options = {});

} // namespace tclid
