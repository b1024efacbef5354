#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "hybridjump/model.hpp"
#include "hybridjump/rng.hpp"

namespace hybridjump {

enum class Representation { Fictive, Real, Hybrid };

struct SimConfig {
  double horizon = 1.0;
  double step = 1e-3;            // flow step h
  std::uint64_t seed = 0;
  std::size_t paths = 1;
  Representation representation = Representation::Fictive;
  std::optional<double> dominating_bound;  // Gamma' >= Gamma for thinning
  bool record = true;            // keep per-jump events in PathRecord

  void validate() const;
};

struct JumpEvent {
  double time;
  double mark;
  bool sentinel;   // real-shock no-jump draw (mark is then meaningless)
  double uniform;  // thinning variable, NaN for the real representation
  bool accepted;
  Vec before;
  Vec after;
};

struct PathRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Representation representation = Representation::Fictive;
  double t0 = 0.0;
  Vec initial;
  std::vector<JumpEvent> events;  // empty unless cfg.record
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  Vec terminal;
};

// Euler-Maruyama for dX = b dt + sigma dW on [t0, t1], steps of h with the
// last one shortened. Returns x unchanged when there is no flow.
Vec flow_segment(const JumpModel& m, Vec x, double t0, double t1, double h, RngStream& rng);

PathRecord simulate_fictive(const JumpModel& m, const Region& g, const Vec& x, double t0,
                            const SimConfig& cfg, RngStream& rng);
PathRecord simulate_real(const JumpModel& m, const Region& g, const Vec& x, double t0,
                         const SimConfig& cfg, RngStream& rng);
PathRecord simulate_hybrid(const JumpModel& m, const Region& g, const Vec& x, double t0,
                           const SimConfig& cfg, RngStream& rng);
PathRecord simulate(const JumpModel& m, const Region& g, const Vec& x, double t0,
                    const SimConfig& cfg, RngStream& rng);

using Observable = std::function<double(const Vec&)>;

// f(X_T) for paths 0..N-1, path i driven by RngStream(cfg.seed, i). The
// result does not depend on the worker count.
std::vector<double> terminal_samples(const JumpModel& m, const Region& g, const Vec& x, const Observable& f,
                                     const SimConfig& cfg, int workers);
std::vector<double> terminal_samples_serial(const JumpModel& m, const Region& g, const Vec& x,
                                            const Observable& f, const SimConfig& cfg);

// Synchronous coupling of X^{G1} and X^{G2} for G1 inside G2: one proposal
// stream on G2 (marks outside G1 are ignored by X^{G1}) and shared Brownian
// increments. The gap is sampled at every flow step and jump.
struct CoupledPath {
  double sup_gap = 0.0;
  Vec terminal1;
  Vec terminal2;
};
CoupledPath simulate_coupled(const JumpModel& m, const Region& g1, const Region& g2, const Vec& x1,
                             const Vec& x2, double t0, const SimConfig& cfg, RngStream& rng);
std::vector<double> coupled_sup_gaps(const JumpModel& m, const Region& g1, const Region& g2, const Vec& x1,
                                     const Vec& x2, const SimConfig& cfg, int workers);

int default_workers();

}  // namespace hybridjump
