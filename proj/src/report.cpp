#include "fwc/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "fwc/errors.hpp"

namespace fwc {

using nlohmann::json;

std::string blob_hash(std::string_view content) {
  std::string header = "blob " + std::to_string(content.size());
  header.push_back('\0');
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw IoError("sha1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string file_blob_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return blob_hash(content);
}

json to_json(const MMConfig& c) {
  return json{{"metric", to_string(c.metric.kind)},
              {"cat_penalty", c.metric.cat_penalty},
              {"update_mode", to_string(c.update)},
              {"max_outer_iters", c.max_outer_iters},
              {"tol_objective", c.tol_objective},
              {"tol_x", c.tol_x},
              {"seed", c.seed},
              {"reseed_empty", c.reseed_empty},
              {"inner", {{"tol", c.inner.tol},
                         {"max_cuts", c.inner.max_cuts},
                         {"max_box_doublings", c.inner.max_box_doublings},
                         {"newton_tol", c.inner.newton_tol},
                         {"max_newton_steps", c.inner.max_newton_steps},
                         {"tie_tol", c.inner.tie_tol}}}};
}

json to_json(const Disparity& d) {
  return json{{"value", d.value}, {"d", d.d}, {"y", d.y}};
}

json to_json(const RunReport& r, bool include_timing) {
  json diags = json::array();
  for (const auto& d : r.diagnostics)
    diags.push_back({{"objective", d.objective},
                     {"lp_value", d.lp_value},
                     {"surrogate_next", d.surrogate_next},
                     {"movement", d.movement},
                     {"constraint_slack", d.constraint_slack},
                     {"inner_cuts", d.inner_cuts},
                     {"inner_gap", d.inner_gap},
                     {"inner_converged", d.inner_converged},
                     {"inner_boundary", d.inner_boundary},
                     {"feasibility_moves", d.feasibility_moves},
                     {"kept_previous_plan", d.kept_previous_plan}});
  json out{{"objective_trace", r.objective_trace},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"inner_all_converged", r.inner_all_converged},
           {"feasible", r.feasible},
           {"padded", r.padded},
           {"constrained", r.constrained},
           {"epsilon", r.epsilon},
           {"disparity_J", r.disparity.value},
           {"disparity_argmax", {{"d", r.disparity.d}, {"y", r.disparity.y}}},
           {"success", r.success()},
           {"diagnostics", diags}};
  if (include_timing) out["wall_seconds"] = r.wall_seconds;
  return out;
}

json to_json(const EvalReport& r) {
  return json{{"wasserstein", r.wasserstein},         {"clustering_cost", r.clustering_cost},
              {"disparity_J", r.disparity_J},         {"downstream_auc", r.downstream_auc},
              {"downstream_dd", r.downstream_dd},     {"tradeoff", r.tradeoff}};
}

void write_json(const json& value, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace fwc
