#include <cmath>
#include <fstream>
#include <sstream>

#include "dean/ensemble.hpp"
#include "dean/error.hpp"
#include "json.hpp"

namespace dean::ensemble {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "dean-ensemble";
constexpr int kVersion = 1;

json config_to_json(const EnsembleConfig& c) {
  return {{"n_submodels", c.n_submodels},
          {"bag_size", c.bag_size},
          {"hidden", c.hidden},
          {"power", c.power},
          {"epochs", c.train.epochs},
          {"patience", c.train.patience},
          {"learning_rate", c.train.learning_rate},
          {"batch_size", c.train.batch_size},
          {"loss", nn::to_string(c.train.loss)},
          {"master_seed", c.master_seed}};
}

EnsembleConfig config_from_json(const json& j) {
  EnsembleConfig c;
  c.n_submodels = j.at("n_submodels").get<std::size_t>();
  c.bag_size = j.at("bag_size").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.power = j.at("power").get<unsigned>();
  c.train.epochs = j.at("epochs").get<std::size_t>();
  c.train.patience = j.at("patience").get<std::size_t>();
  c.train.learning_rate = j.at("learning_rate").get<double>();
  c.train.batch_size = j.at("batch_size").get<std::size_t>();
  c.train.loss = nn::parse_loss(j.at("loss").get<std::string>());
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  return c;
}

std::vector<double> reals(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(std::string(what) + " must contain numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw DataError(std::string(what) + " contains a non-finite value");
    out.push_back(x);
  }
  return out;
}

}  // namespace

std::string to_json(const Ensemble& e) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["scaler"] = {{"mean", e.scaler.mean}, {"std", e.scaler.std}};
  doc["power"] = e.power;
  doc["weights"] = e.weights;
  doc["config"] = config_to_json(e.config);
  json subs = json::array();
  for (const auto& s : e.submodels) {
    json layers = json::array();
    for (const auto& l : s.net.layers) {
      layers.push_back({{"rows", l.weights.rows()},
                        {"cols", l.weights.cols()},
                        {"weights", l.weights.values()},
                        {"bias", l.bias ? json(*l.bias) : json(nullptr)},
                        {"activation", nn::to_string(l.activation)}});
    }
    subs.push_back({{"seed", s.seed}, {"mask", s.mask.indices}, {"q", s.q}, {"layers", layers}});
  }
  doc["submodels"] = std::move(subs);
  return doc.dump() + "\n";
}

Ensemble from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw DataError(std::string("model file is not valid JSON: ") + err.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormat) {
      throw DataError("not a dean-ensemble model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kVersion) {
      throw DataError("unsupported model version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
    }
    Ensemble e;
    e.scaler.mean = reals(doc.at("scaler").at("mean"), "scaler.mean");
    e.scaler.std = reals(doc.at("scaler").at("std"), "scaler.std");
    e.power = doc.at("power").get<unsigned>();
    e.weights = reals(doc.at("weights"), "weights");
    if (doc.contains("config")) {
      e.config = config_from_json(doc.at("config"));
    } else {
      e.config.power = e.power;
    }
    for (const auto& js : doc.at("submodels")) {
      surrogate::Submodel s;
      s.seed = js.at("seed").get<std::uint64_t>();
      s.mask.indices = js.at("mask").get<std::vector<std::size_t>>();
      s.mask.source_dim = e.scaler.mean.size();
      s.q = js.at("q").get<double>();
      for (const auto& jl : js.at("layers")) {
        nn::Layer layer;
        const auto rows = jl.at("rows").get<std::size_t>();
        const auto cols = jl.at("cols").get<std::size_t>();
        auto w = reals(jl.at("weights"), "layer weights");
        if (w.size() != rows * cols) throw DataError("layer weight count does not match shape");
        layer.weights = Matrix(rows, cols, std::move(w));
        if (!jl.at("bias").is_null()) layer.bias = reals(jl.at("bias"), "layer bias");
        layer.activation = nn::parse_activation(jl.at("activation").get<std::string>());
        s.net.layers.push_back(std::move(layer));
      }
      e.submodels.push_back(std::move(s));
    }
    e.config.n_submodels = e.submodels.size();
    e.validate();
    return e;
  } catch (const json::exception& err) {
    throw DataError(std::string("model file schema violation: ") + err.what());
  }
}

void save(const Ensemble& e, const std::filesystem::path& path) {
  const std::string text = to_json(e);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

Ensemble load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace dean::ensemble
