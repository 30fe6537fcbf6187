#pragma once

#include <string>
#include <vector>

#include "wlanfair/analytic.hpp"
#include "wlanfair/scenario.hpp"

namespace wlanfair {

enum class Criterion { DCF, PF, LPF, MLPF };

const char* criterion_name(Criterion c);
bool criterion_from_name(const std::string& name, Criterion& out);

struct FairnessWeights {
    Criterion criterion = Criterion::PF;
    std::vector<double> w;          // per station, normalized to max 1
    std::vector<double> lambda_eff; // clamped rates (MLPF) or raw (LPF/PF)
    double lambda_max = 0;          // normalizer
    double sum() const;             // C in the stationarity condition
};

// Weight vectors per criterion. MLPF clamps each rate at the station's
// capacity: lambda* = min(lambda, R_d / (8 PL)). Throws std::invalid_argument
// when every lambda is zero.
FairnessWeights effective_lambdas(const NetworkScenario& sc, Criterion crit);

// U = sum w_s ln(S_s [bit/s]); -inf when any weighted S_s <= 0.
double utility(const std::vector<double>& s_bps, const FairnessWeights& w);

// Jain's index (sum x)^2 / (N sum x^2) on an already-normalized vector.
// Throws std::invalid_argument on an all-zero input.
double jain_index(const std::vector<double>& xs);

// Max_j |LHS_j - RHS_j| of the first-order stationarity condition
//   w_j / tau_j - (sum_{k != j} w_k) / (1 - tau_j) = (C / T_av) dT_av/dtau_j
// with the derivative taken by central finite differences, independent of
// the optimizer's internal gradient.
double stationarity_residual(const std::vector<double>& taus, const FairnessWeights& w,
                             const NetworkScenario& sc, const DurationClassing& cl);

struct AllocationResult {
    Criterion criterion = Criterion::DCF;
    std::vector<double> tau_opt;
    std::vector<int> cw_out;
    std::vector<double> s_bps;
    double aggregate_bps = 0;
    double utility = 0;
    double jain = 0;
    double stationarity_residual = 0;
    std::vector<double> p_eq; // operating point used for the CW inversion
    std::vector<double> b_idle;
};

// Maximize the weighted log utility over tau in (0,1)^N (stations with
// lambda = 0 are pinned at tau = 0), subject to S_s <= R_d. DCF skips the
// optimization and reports the plain equilibrium. Throws SolverError when no
// start converges.
AllocationResult optimize(const NetworkScenario& sc, Criterion crit);

} // namespace wlanfair
