#pragma once

#include "icpa/config.hpp"
#include "icpa/synthetic.hpp"

namespace icpa::test {

/// A graph and configuration small enough for unit tests to train in seconds.
inline MultiSourceGraph tiny_graph(std::size_t sources = 2, double conflict = 0.0,
                                   std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.sources = sources;
  spec.categories = 2;
  spec.nodes_per_source = 48;
  spec.clusters = 3;
  spec.conflict_rate = conflict;
  spec.seed = seed;
  return generate_synthetic(spec).graph;
}

inline TrainConfig tiny_config() {
  TrainConfig c;
  c.model.embed_dim = 4;
  c.model.hidden = {16, 8};
  c.gate_hidden = {8};
  c.batch_size = 32;
  c.projections = 16;
  c.align_cap = 64;
  c.phase1_steps = 40;
  c.phase2_steps = 40;
  c.eval_every = 10;
  c.patience = 0;
  c.probe_triples = 48;
  c.eval_queries = 8;
  c.learning_rate = 0.1;
  return c;
}

}  // namespace icpa::test
