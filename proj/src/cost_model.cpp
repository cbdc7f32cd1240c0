#include "rso/cost_model.hpp"

#include <json.hpp>

#include "rso/error.hpp"

namespace rso {

namespace {

constexpr std::size_t kVocab = 32000;

const std::vector<ArchSpec>& arch_table() {
  static const std::vector<ArchSpec> table = {
      {"60M", 512, 1376, 8, 8},
      {"130M", 768, 2048, 12, 12},
      {"350M", 1024, 2736, 16, 24},
      {"1B", 2048, 5461, 24, 32},
      {"7B", 4096, 11008, 32, 32},
  };
  return table;
}

}  // namespace

Alg alg_from_string(const std::string& s) {
  if (s == "rso") return Alg::rso;
  if (s == "galore") return Alg::galore;
  if (s == "lora") return Alg::lora;
  if (s == "adam") return Alg::adam;
  throw_config("unknown algorithm '" + s + "'");
}

std::string to_string(Alg a) {
  switch (a) {
    case Alg::rso: return "rso";
    case Alg::galore: return "galore";
    case Alg::lora: return "lora";
    case Alg::adam: return "adam";
  }
  return "?";
}

std::size_t optimizer_state_entries(Alg alg, const BlockShape& shape) {
  const std::size_t n = shape.n, r = shape.r;
  if (n == 0) throw_config("optimizer_state_entries: n must be positive");
  switch (alg) {
    case Alg::rso:
    case Alg::galore:
      if (r == 0 || r > n) throw_config("optimizer_state_entries: need 1 <= r <= n");
      return 24 * n * r;
    case Alg::lora:
      if (r == 0 || r > n) throw_config("optimizer_state_entries: need 1 <= r <= n");
      return 48 * n * r;
    case Alg::adam:
      return 24 * n * n;
  }
  throw_config("optimizer_state_entries: bad algorithm");
}

ActivationBreakdown activation_entries(Alg alg, const BlockShape& shape) {
  const std::size_t s = shape.s, n = shape.n, r = shape.r, b = shape.b;
  if (s == 0 || n == 0 || b == 0) throw_config("activation_entries: bad shape");
  ActivationBreakdown out;
  if (alg == Alg::rso) {
    out.m1 = 3 * s * n + s * r;
    out.m2 = 2 * s * s + 2 * s * r;
    out.m3 = 5 * s * n + s * r;
  } else {
    out.m1 = 4 * s * n;
    out.m2 = 2 * s * s + 2 * s * n;
    out.m3 = 9 * s * n;
  }
  out.total = b * (out.m1 + out.m2 + out.m3);
  return out;
}

std::size_t comm_bytes_per_sync(Alg alg, const std::vector<LayerDim>& layers, int element_bytes) {
  if (element_bytes != 2 && element_bytes != 4)
    throw_config("comm_bytes_per_sync: element width must be 2 or 4 bytes");
  std::size_t entries = 0;
  for (const LayerDim& l : layers) {
    switch (alg) {
      case Alg::rso:
        if (l.r == 0 || l.r > l.m) throw_config("comm_bytes_per_sync: need 1 <= r <= m");
        entries += l.r * l.n;
        break;
      case Alg::adam:
      case Alg::galore:
        entries += l.m * l.n;
        break;
      case Alg::lora:
        entries += l.r * (l.m + l.n);
        break;
    }
  }
  return entries * static_cast<std::size_t>(element_bytes);
}

const ArchSpec& arch_by_name(const std::string& name) {
  for (const ArchSpec& a : arch_table())
    if (a.name == name) return a;
  throw_config("unknown architecture '" + name + "'");
}

std::vector<std::string> arch_names() {
  std::vector<std::string> out;
  for (const ArchSpec& a : arch_table()) out.push_back(a.name);
  return out;
}

CostReport model_memory_report(const std::string& arch, Alg alg, std::size_t rank,
                               int element_bytes, std::size_t seq, std::size_t batch) {
  const ArchSpec& a = arch_by_name(arch);
  const std::size_t n = a.hidden, inter = a.intermediate;
  if (alg != Alg::adam && (rank == 0 || rank > n))
    throw_config("model_memory_report: need 1 <= rank <= hidden dim");
  if (element_bytes != 2 && element_bytes != 4)
    throw_config("model_memory_report: element width must be 2 or 4 bytes");

  CostReport rep;
  rep.arch = a.name;
  rep.alg = to_string(alg);
  rep.rank = (alg == Alg::adam) ? 0 : rank;
  rep.element_bytes = element_bytes;
  rep.seq = seq;
  rep.batch = batch;

  // optimizer states per block, actual matrix shapes
  const std::size_t block_params_full = 4 * n * n + 2 * n * inter;
  const std::size_t block_params_proj = rank * (5 * n + inter);
  switch (alg) {
    case Alg::adam: rep.block_state_entries = 2 * block_params_full; break;
    case Alg::rso:
    case Alg::galore: rep.block_state_entries = 2 * block_params_proj; break;
    case Alg::lora: rep.block_state_entries = 4 * block_params_proj; break;
  }
  rep.embed_state_entries = 2 * (2 * kVocab * n);  // embedding + head, Adam moments
  rep.optimizer_state_entries = a.layers * rep.block_state_entries + rep.embed_state_entries;
  rep.optimizer_state_bytes =
      rep.optimizer_state_entries * static_cast<std::size_t>(element_bytes);
  rep.optimizer_state_gb = static_cast<double>(rep.optimizer_state_bytes) / 1e9;

  // activations per block at the architecture's intermediate width
  const std::size_t s = seq;
  std::size_t act_per_elem;
  if (alg == Alg::rso)
    act_per_elem = 4 * s * n + s * inter + 2 * s * s + 4 * s * rank;
  else
    act_per_elem = 7 * s * n + 2 * s * inter + 2 * s * s;
  rep.activation_entries = a.layers * batch * act_per_elem;
  rep.activation_bytes = rep.activation_entries * static_cast<std::size_t>(element_bytes);

  // one gradient synchronization over the block matrices
  std::vector<LayerDim> dims;
  for (std::size_t l = 0; l < a.layers; ++l) {
    for (int q = 0; q < 4; ++q) dims.push_back({n, n, rank});
    dims.push_back({n, inter, rank});
    dims.push_back({inter, n, rank});
  }
  const Alg comm_alg = (alg == Alg::lora) ? Alg::lora : alg;
  rep.comm_bytes = comm_bytes_per_sync(comm_alg, dims, element_bytes);
  rep.gradient_entries = rep.comm_bytes / static_cast<std::size_t>(element_bytes);
  return rep;
}

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["arch"] = arch;
  j["alg"] = alg;
  j["rank"] = rank;
  j["element_bytes"] = element_bytes;
  j["seq"] = seq;
  j["batch"] = batch;
  j["optimizer_state_bytes"] = optimizer_state_bytes;
  j["activation_bytes"] = activation_bytes;
  j["comm_bytes"] = comm_bytes;
  j["breakdown"] = {
      {"optimizer_state_entries", optimizer_state_entries},
      {"activation_entries", activation_entries},
      {"gradient_entries", gradient_entries},
      {"block_state_entries", block_state_entries},
      {"embed_state_entries", embed_state_entries},
      {"optimizer_state_gb", optimizer_state_gb},
  };
  return j.dump(2);
}

}  // namespace rso
