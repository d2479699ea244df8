#include "sonarmark/model_io.hpp"

#include <fstream>
#include <sstream>

#include "sonarmark/error.hpp"
#include "sonarmark/labels.hpp"

namespace sonarmark {

nlohmann::ordered_json model_to_json(const ModelArtifact& artifact) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["pipeline_version"] = artifact.pipeline_version;
  auto& classes = doc["class_list"] = ordered_json::array();
  for (const int c : artifact.ensemble.class_list) classes.push_back(class_name(c));
  const FeatureConfig& f = artifact.features;
  doc["bin_spec"] = {{"f_low", f.bins.f_low}, {"f_high", f.bins.f_high}, {"n_bins", f.bins.n_bins}};
  doc["crop_spec"] = {{"margin", f.crop.margin}, {"crop_length", f.crop.crop_length}};
  doc["window"] = {{"taper_fraction", f.taper_fraction}};
  doc["filter"] = {{"low_cut", f.filter.low_cut}, {"high_cut", f.filter.high_cut}, {"num_taps", f.filter.num_taps}};
  doc["sample_rate"] = artifact.sample_rate;
  doc["speed_of_sound"] = f.speed_of_sound;
  auto& models = doc["models"] = ordered_json::array();
  for (const LinearModel& m : artifact.ensemble.models) {
    models.push_back({{"class_a", class_name(m.classes.first)},
                      {"class_b", class_name(m.classes.second)},
                      {"weights", m.weights},
                      {"bias", m.bias}});
  }
  return doc;
}

ModelArtifact model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw error(errc::version_mismatch, "unsupported model format_version");
    }
    ModelArtifact a;
    a.pipeline_version = doc.at("pipeline_version").get<std::string>();
    for (const auto& c : doc.at("class_list")) a.ensemble.class_list.push_back(parse_class(c.get<std::string>()));
    const auto& bins = doc.at("bin_spec");
    a.features.bins = {bins.at("f_low").get<double>(), bins.at("f_high").get<double>(),
                       bins.at("n_bins").get<std::size_t>()};
    const auto& crop = doc.at("crop_spec");
    a.features.crop = {crop.at("margin").get<double>(), crop.at("crop_length").get<std::size_t>()};
    a.features.taper_fraction = doc.at("window").at("taper_fraction").get<double>();
    const auto& filt = doc.at("filter");
    a.features.filter = {filt.at("low_cut").get<double>(), filt.at("high_cut").get<double>(),
                         filt.at("num_taps").get<std::size_t>()};
    a.sample_rate = doc.at("sample_rate").get<double>();
    a.features.speed_of_sound = doc.at("speed_of_sound").get<double>();
    for (const auto& m : doc.at("models")) {
      LinearModel model;
      model.classes = {parse_class(m.at("class_a").get<std::string>()), parse_class(m.at("class_b").get<std::string>())};
      model.weights = m.at("weights").get<std::vector<double>>();
      model.bias = m.at("bias").get<double>();
      if (model.weights.size() != a.features.bins.n_bins) {
        throw error(errc::dimension_mismatch, "model weight count does not match n_bins");
      }
      a.ensemble.models.push_back(std::move(model));
    }
    const std::size_t k = a.ensemble.class_list.size();
    if (a.ensemble.models.size() != k * (k - 1) / 2) {
      throw error(errc::corrupt_file, "model count does not match k(k-1)/2");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::corrupt_file, std::string("malformed model file: ") + e.what());
  }
}

std::string serialize_model(const ModelArtifact& artifact) { return model_to_json(artifact).dump(2) + "\n"; }

void save_model(const std::filesystem::path& path, const ModelArtifact& artifact) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot write " + path.string());
  out << serialize_model(artifact);
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw error(errc::corrupt_file, path.string() + ": " + e.what());
  }
}

void require_compatible(const ModelArtifact& artifact) {
  if (artifact.pipeline_version != kPipelineVersion) {
    throw error(errc::version_mismatch, "model built by pipeline '" + artifact.pipeline_version +
                                            "', this binary runs '" + kPipelineVersion + "'");
  }
}

}  // namespace sonarmark
