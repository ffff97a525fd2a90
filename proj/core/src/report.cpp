#include "icpa/report.hpp"

#include <cmath>
#include <fstream>

#include "icpa/error.hpp"

namespace icpa {

namespace {

using nlohmann::json;

// nlohmann dumps NaN as null already; spelling it out keeps that explicit.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

json matrix(const std::vector<std::vector<double>>& v) {
  json out = json::array();
  for (const auto& row : v) out.push_back(numbers(row));
  return out;
}

json target_to_json(const TargetResult& t) {
  json out = {
      {"target", t.target},
      {"trace", trace_to_json(t.trace)},
      {"target_weight", numbers(t.target_weight)},
      {"align_loss", numbers(t.align_loss)},
      {"restricted_steps", t.restricted_steps},
      {"final_losses", numbers(t.final_losses)},
      {"epsilon", numbers(t.epsilon)},
      {"held_out_risk", numbers(t.held_out_risk)},
      {"ranking",
       {{"ndcg", number(t.ranking.ndcg)},
        {"f_measure", number(t.ranking.f_measure)},
        {"queries", t.ranking.queries}}},
      {"frozen_hashes",
       {{"model_before", hex64(t.frozen_model_hash_before)},
        {"model_after", hex64(t.frozen_model_hash_after)},
        {"gate_before", hex64(t.frozen_gate_hash_before)},
        {"gate_after", hex64(t.frozen_gate_hash_after)}}},
  };
  if (t.vrec)
    out["vrec"] = {{"volume", number(t.vrec->volume)},
                   {"am_gm_bound", number(t.vrec->am_gm_bound)}};
  else
    out["vrec"] = nullptr;
  return out;
}

json front_to_json(const FrontSummary& f) {
  json points = json::array();
  for (std::size_t i = 0; i < f.population.size(); ++i)
    points.push_back({{"label", f.labels.at(i)}, {"losses", numbers(f.population[i])}});
  return {
      {"population", points},
      {"front", f.front},
      {"reference", numbers(f.reference)},
      {"reference_note", "componentwise min of nu0 and every scored point"},
      {"ceiling", numbers(f.ceiling)},
      {"huf",
       {{"volume", number(f.huf.volume)},
        {"std_error", number(f.huf.std_error)},
        {"exact", f.huf.exact},
        {"samples", f.huf.samples}}},
      {"convexity", number(f.convexity)},
  };
}

}  // namespace

json trace_to_json(const PhaseTrace& trace) {
  json probes = json::array();
  for (const auto& p : trace.probes) probes.push_back({{"step", p.step}, {"losses", numbers(p.losses)}});
  return {{"step_loss", numbers(trace.step_loss)},
          {"probes", probes},
          {"steps_run", trace.steps_run},
          {"best_step", trace.best_step},
          {"early_stopped", trace.early_stopped}};
}

PhaseTrace trace_from_json(const json& doc) {
  auto values = [](const json& arr) {
    std::vector<double> out;
    for (const auto& x : arr) out.push_back(x.is_null() ? std::nan("") : x.get<double>());
    return out;
  };
  PhaseTrace t;
  t.step_loss = values(doc.at("step_loss"));
  for (const auto& p : doc.at("probes"))
    t.probes.push_back({p.at("step").get<std::size_t>(), values(p.at("losses"))});
  t.steps_run = doc.at("steps_run").get<std::size_t>();
  t.best_step = doc.at("best_step").get<std::size_t>();
  t.early_stopped = doc.at("early_stopped").get<bool>();
  return t;
}

json report_to_json(const RunResult& r) {
  json soo = json::array();
  for (std::size_t s = 0; s < r.soo.size(); ++s)
    soo.push_back({{"source", s},
                   {"nu0", number(r.nu0.at(s))},
                   {"held_out_risk", numbers(r.soo_held_out_risk.at(s))},
                   {"trace", trace_to_json(r.soo[s])}});

  json targets = json::array();
  for (const auto& t : r.targets) targets.push_back(target_to_json(t));

  json gates = json::array();
  for (const auto& g : r.gates)
    gates.push_back({{"category", g.category},
                     {"nodes", g.nodes},
                     {"mean", number(g.mean)},
                     {"direction", matrix(g.direction)}});

  json alignment = json::array();
  for (const auto& a : r.alignment)
    alignment.push_back({{"category", a.category},
                         {"gated_loss", number(a.gated_loss)},
                         {"pair_cost", matrix(a.pair_cost)}});

  json out = {
      {"format", "icpa-report"},
      {"version", 1},
      {"config", to_json(r.config)},
      {"config_hash", hex64(r.config_hash)},
      {"data_hash", hex64(r.data_hash)},
      {"num_sources", r.num_sources},
      {"num_categories", r.num_categories},
      {"train_edges", r.train_edges},
      {"held_out_edges", r.held_out_edges},
      {"nu0", numbers(r.nu0)},
      {"soo", soo},
      {"phase1", r.phase1 ? trace_to_json(*r.phase1) : json(nullptr)},
      {"phase1_align_loss", numbers(r.phase1_align_loss)},
      {"targets", targets},
      {"front", r.front ? front_to_json(*r.front) : json(nullptr)},
      {"gates", gates},
      {"alignment", alignment},
  };
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

}  // namespace icpa
