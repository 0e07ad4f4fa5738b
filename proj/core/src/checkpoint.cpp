#include "scorekit/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'K', 'C', 'K', 'P', 'T', '1', '\n'};

void write_file(const std::string& path, const json& header,
                const std::vector<const Eigen::VectorXd*>& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::string head = header.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(head.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const Eigen::VectorXd* block : payload) {
    out.write(reinterpret_cast<const char*>(block->data()),
              static_cast<std::streamsize>(block->size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

json read_file(const std::string& path, std::ifstream& in) {
  in.open(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic in " + path);
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) throw IoError("checkpoint: bad header in " + path);
  std::string head(len, '\0');
  in.read(head.data(), len);
  if (!in) throw IoError("checkpoint: truncated header in " + path);
  try {
    return json::parse(head);
  } catch (const json::parse_error& e) {
    throw IoError("checkpoint: invalid header json in " + path + ": " + e.what());
  }
}

Eigen::VectorXd read_block(std::ifstream& in, Eigen::Index n,
                           const std::string& path) {
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("checkpoint: truncated payload in " + path);
  return v;
}

}  // namespace

void save_score_model(const std::string& path, const ScoreModel& model) {
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    json header{{"kind", "analytic_gaussian"},
                {"dim", g->dim()},
                {"has_offset", g->offset.size() != 0}};
    std::vector<const Eigen::VectorXd*> payload{&g->mean0, &g->var0};
    if (g->offset.size() != 0) payload.push_back(&g->offset);
    write_file(path, header, payload);
    return;
  }
  const auto& m = std::get<MlpScore>(model);
  json header{{"kind", "mlp"},
              {"dim", m.dim()},
              {"hidden", m.config().hidden},
              {"num_frequencies", m.config().num_frequencies},
              {"embed_scale", m.config().embed_scale},
              {"param_count", m.params.size()}};
  write_file(path, header, {&m.params});
}

ScoreModel load_score_model(const std::string& path) {
  std::ifstream in;
  const json header = read_file(path, in);
  const std::string kind = header.value("kind", "");
  if (kind == "analytic_gaussian") {
    const Eigen::Index dim = header.at("dim").get<Eigen::Index>();
    AnalyticGaussianScore g;
    g.mean0 = read_block(in, dim, path);
    g.var0 = read_block(in, dim, path);
    if (header.value("has_offset", false)) {
      g.offset = read_block(in, dim, path);
    }
    g.validate();
    return g;
  }
  if (kind == "mlp") {
    MlpScoreConfig cfg;
    cfg.hidden = header.at("hidden").get<std::vector<Eigen::Index>>();
    cfg.num_frequencies = header.at("num_frequencies").get<int>();
    cfg.embed_scale = header.at("embed_scale").get<double>();
    MlpScore m(header.at("dim").get<Eigen::Index>(), cfg);
    const auto n = header.at("param_count").get<Eigen::Index>();
    if (n != m.net().param_count()) {
      throw ConfigError("checkpoint: parameter count does not match layout in " +
                        path);
    }
    m.params = read_block(in, n, path);
    return m;
  }
  throw ConfigError("checkpoint: " + path + " does not hold a score model");
}

void save_dequant_flow(const std::string& path, const DequantFlow& flow) {
  json header{{"kind", "dequant_flow"},
              {"dim", flow.dim()},
              {"levels", flow.levels()},
              {"n_transforms", flow.config().n_transforms},
              {"cond_hidden", flow.config().cond_hidden},
              {"param_count", flow.params.size()}};
  write_file(path, header, {&flow.params});
}

DequantFlow load_dequant_flow(const std::string& path) {
  std::ifstream in;
  const json header = read_file(path, in);
  if (header.value("kind", "") != "dequant_flow") {
    throw ConfigError("checkpoint: " + path + " does not hold a dequant flow");
  }
  DequantFlowConfig cfg;
  cfg.n_transforms = header.at("n_transforms").get<int>();
  cfg.cond_hidden = header.at("cond_hidden").get<std::vector<Eigen::Index>>();
  DequantFlow flow(header.at("dim").get<Eigen::Index>(),
                   header.at("levels").get<int>(), cfg);
  const auto n = header.at("param_count").get<Eigen::Index>();
  if (n != flow.conditioner().param_count()) {
    throw ConfigError("checkpoint: parameter count does not match layout in " +
                      path);
  }
  flow.params = read_block(in, n, path);
  return flow;
}

}  // namespace scorekit
