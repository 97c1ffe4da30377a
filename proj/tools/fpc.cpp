// fpc: command-line driver for the fingerprint compression toolkit.

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpc/codec.hpp"
#include "fpc/data.hpp"
#include "fpc/errors.hpp"
#include "fpc/minutiae.hpp"
#include "fpc/model.hpp"
#include "fpc/quality.hpp"
#include "fpc/wavelet.hpp"

namespace fs = std::filesystem;
using namespace fpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.6f") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ImageIoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw ImageIoError("cannot write " + p.string());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw ImageIoError("cannot write " + p.string());
}

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

// ---------------------------------------------------------------------------
// Codec operating points

enum class CodecKind { learned, wavelet, identity, external_csv, reconstructions };

struct OperatingPoint {
  CodecKind kind = CodecKind::learned;
  std::string codec;    // label in reports
  std::string quality;  // label in reports
  std::shared_ptr<const codec::LearnedCodec> learned;
  double ratio = 0.0;
  fs::path recon_dir;
};

struct Selection {
  std::vector<OperatingPoint> points;
  std::vector<wavelet::ExternalResult> external;
};

std::string lambda_label(const model::ModelWeights& w) {
  if (w.lambda_tag > 0.0f) return fmt(w.lambda_tag, "%g");
  return w.model_id;
}

Selection select_codecs(const std::vector<std::string>& codecs, const std::vector<std::string>& weights,
                        const std::vector<std::string>& qualities, const std::string& external_csv,
                        const std::string& recon_dir) {
  Selection s;
  if (codecs.empty()) throw ConfigError("no codec selected");
  for (const auto& name : codecs) {
    if (name == "finger-msh") {
      if (weights.empty()) throw ConfigError("finger-msh needs --weights");
      std::vector<OperatingPoint> family;
      for (const auto& path : weights) {
        if (!fs::exists(path)) throw ConfigError("weight file not found: " + path);
        auto w = model::load_weights_file(path);
        OperatingPoint op;
        op.kind = CodecKind::learned;
        op.codec = name;
        op.quality = lambda_label(w);
        op.learned = std::make_shared<codec::LearnedCodec>(std::move(w));
        family.push_back(std::move(op));
      }
      std::stable_sort(family.begin(), family.end(), [](const OperatingPoint& a, const OperatingPoint& b) {
        return a.learned->weights().lambda_tag < b.learned->weights().lambda_tag;
      });
      for (auto& op : family) s.points.push_back(std::move(op));
    } else if (name == "wavelet") {
      const std::vector<std::string> ratios =
          qualities.empty() ? std::vector<std::string>{"40", "30", "20", "10", "5"} : qualities;
      for (const auto& r : ratios) {
        OperatingPoint op;
        op.kind = CodecKind::wavelet;
        op.codec = name;
        try {
          op.ratio = std::stod(r);
        } catch (const std::exception&) {
          throw ConfigError("wavelet quality must be a compression ratio, got '" + r + "'");
        }
        if (!(op.ratio > 1.0)) throw ConfigError("compression ratio must exceed 1");
        op.quality = fmt(op.ratio, "%g");
        s.points.push_back(std::move(op));
      }
    } else if (name == "identity") {
      s.points.push_back({CodecKind::identity, name, "lossless", nullptr, 0.0, {}});
    } else if (name == "external-csv") {
      if (external_csv.empty()) throw ConfigError("external-csv needs --external-csv");
      s.external = wavelet::read_external_csv(external_csv);
      if (s.external.empty()) throw ConfigError("external CSV has no rows");
    } else if (name == "reconstructions") {
      if (recon_dir.empty() || !fs::is_directory(recon_dir)) {
        throw ConfigError("reconstructions needs --reconstructions pointing at a directory");
      }
      s.points.push_back({CodecKind::reconstructions, name, fs::path(recon_dir).filename().string(), nullptr,
                          0.0, recon_dir});
    } else {
      throw ConfigError("unknown codec '" + name +
                        "' (expected finger-msh, wavelet, external-csv, identity or reconstructions)");
    }
  }
  return s;
}

struct Coded {
  std::size_t bytes = 0;
  Image reconstruction;
};

Coded run_point(const OperatingPoint& op, const Image& x, const std::string& image_id) {
  switch (op.kind) {
    case CodecKind::learned: {
      const auto r = op.learned->encode(x);
      return {r.stream.total_bytes(), r.reconstruction};
    }
    case CodecKind::wavelet: {
      wavelet::WaveletConfig cfg;
      cfg.target_ratio = op.ratio;
      const auto r = wavelet::encode_baseline(x, cfg);
      return {r.stream.total_bytes(), wavelet::decode_baseline(r.stream)};
    }
    case CodecKind::identity:
      return {x.size(), x};
    case CodecKind::reconstructions: {
      Image rec = data::load_gray(op.recon_dir / (image_id + ".png"));
      if (rec.height() != x.height() || rec.width() != x.width()) rec = data::center_crop(rec, x.height());
      return {0, rec};
    }
    case CodecKind::external_csv:
      break;
  }
  throw ConfigError("operating point cannot be run");
}

struct Corpus {
  data::Manifest manifest;
  std::vector<data::CorpusEntry> entries;
  std::vector<Image> images;
};

Corpus load_corpus(const std::string& path) {
  if (path.empty()) throw ConfigError("--manifest is required");
  if (!fs::exists(path)) throw ConfigError("manifest not found: " + path);
  Corpus c;
  c.manifest = data::load_manifest(path);
  c.entries = data::scan(c.manifest).in_split(c.manifest.split);
  if (c.entries.empty()) {
    throw ConfigError(std::string("the ") + data::split_name(c.manifest.split) + " split of the corpus is empty");
  }
  c.images.resize(c.entries.size());
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.images[i] = data::load_entry(c.entries[i], c.manifest);
  return c;
}

struct ImageResult {
  bool ok = false;
  std::string error;
  double bpp = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  Image reconstruction;
};

std::vector<ImageResult> run_corpus(const OperatingPoint& op, const Corpus& c, bool keep_reconstruction) {
  std::vector<ImageResult> out(c.images.size());
  const auto n = static_cast<long>(c.images.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    auto& r = out[idx];
    try {
      const Image& x = c.images[idx];
      const Coded coded = run_point(op, x, c.entries[idx].image_id());
      r.bpp = 8.0 * static_cast<double>(coded.bytes) / static_cast<double>(x.size());
      r.psnr = quality::psnr(x, coded.reconstruction);
      r.ssim = quality::ssim(x, coded.reconstruction);
      if (keep_reconstruction) r.reconstruction = coded.reconstruction;
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }
  return out;
}

struct Aggregate {
  std::string codec;
  std::string quality;
  int images = 0;
  int failed = 0;
  int infinite_psnr = 0;
  double bpp = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

// ---------------------------------------------------------------------------
// Commands

struct CommonOptions {
  std::vector<std::string> weights;
  std::string manifest;
  std::vector<std::string> codecs;
  std::vector<std::string> qualities;
  std::string out = ".";
  int threads = 0;
  std::string anchor;
  std::string external_csv;
  std::string reconstructions;
};

int cmd_bench_rd(const CommonOptions& o) {
  set_threads(o.threads);
  const Corpus corpus = load_corpus(o.manifest);
  const Selection sel = select_codecs(split_list(o.codecs), split_list(o.weights), split_list(o.qualities),
                                      o.external_csv, o.reconstructions);
  fs::create_directories(o.out);

  std::vector<Aggregate> rows;
  std::ostringstream per_image;
  per_image << "codec,quality,image_id,bpp,psnr,ssim,status\n";
  int failures = 0;
  for (const auto& op : sel.points) {
    const auto results = run_corpus(op, corpus, false);
    Aggregate a{op.codec, op.quality};
    int finite = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      per_image << op.codec << ',' << op.quality << ',' << corpus.entries[i].image_id() << ',';
      if (!r.ok) {
        ++a.failed;
        ++failures;
        std::cerr << "error: " << op.codec << "@" << op.quality << " " << corpus.entries[i].image_id() << ": "
                  << r.error << "\n";
        per_image << ",,,failed\n";
        continue;
      }
      per_image << fmt(r.bpp) << ',' << fmt(r.psnr) << ',' << fmt(r.ssim, "%.8f") << ",ok\n";
      ++a.images;
      a.bpp += r.bpp;
      a.ssim += r.ssim;
      if (std::isinf(r.psnr)) {
        ++a.infinite_psnr;
      } else {
        a.psnr += r.psnr;
        ++finite;
      }
    }
    if (a.images) {
      a.bpp /= a.images;
      a.ssim /= a.images;
    }
    a.psnr = finite ? a.psnr / finite : quality::kInfinitePsnr;
    rows.push_back(a);
  }

  // External results are aggregated as given, without re-encoding.
  {
    std::map<std::pair<std::string, std::string>, Aggregate> ext;
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, int> finite;
    const double pixels = static_cast<double>(corpus.manifest.crop) * static_cast<double>(corpus.manifest.crop);
    for (const auto& r : sel.external) {
      const auto key = std::make_pair(r.codec, r.quality);
      auto [it, inserted] = ext.try_emplace(key, Aggregate{r.codec, r.quality});
      if (inserted) order.push_back(key);
      auto& a = it->second;
      ++a.images;
      a.bpp += 8.0 * r.bytes / pixels;
      a.ssim += r.ssim;
      if (std::isinf(r.psnr)) {
        ++a.infinite_psnr;
      } else {
        a.psnr += r.psnr;
        ++finite[key];
      }
    }
    for (const auto& key : order) {
      auto a = ext[key];
      a.bpp /= a.images;
      a.ssim /= a.images;
      a.psnr = finite[key] ? a.psnr / finite[key] : quality::kInfinitePsnr;
      rows.push_back(a);
    }
  }

  std::ostringstream csv;
  csv << "codec,quality,images,failed,mean_bpp,mean_psnr,mean_ssim,infinite_psnr\n";
  for (const auto& a : rows) {
    csv << a.codec << ',' << a.quality << ',' << a.images << ',' << a.failed << ',' << fmt(a.bpp) << ','
        << fmt(a.psnr) << ',' << fmt(a.ssim, "%.8f") << ',' << a.infinite_psnr << "\n";
  }
  write_text(fs::path(o.out) / "rd_curves.csv", csv.str());
  write_text(fs::path(o.out) / "rd_points.csv", per_image.str());

  // Curves keyed by codec, one point per quality.
  std::vector<quality::RDCurve> curves;
  for (const auto& a : rows) {
    auto it = std::find_if(curves.begin(), curves.end(), [&](const auto& c) { return c.label == a.codec; });
    if (it == curves.end()) {
      curves.push_back({a.codec, {}});
      it = curves.end() - 1;
    }
    if (a.images > 0 && std::isfinite(a.psnr) && a.bpp > 0) it->points.push_back({a.bpp, a.psnr, a.ssim});
  }
  const std::string anchor = o.anchor.empty() ? (curves.empty() ? "" : curves.front().label) : o.anchor;
  nlohmann::ordered_json summary;
  summary["anchor"] = anchor;
  summary["bd_variant"] = "cubic";
  summary["comparisons"] = nlohmann::ordered_json::array();
  const auto anchor_it = std::find_if(curves.begin(), curves.end(), [&](const auto& c) { return c.label == anchor; });
  if (anchor_it == curves.end()) {
    summary["error"] = "anchor codec '" + anchor + "' has no curve";
  } else {
    for (const auto& c : curves) {
      nlohmann::ordered_json entry;
      entry["codec"] = c.label;
      entry["points"] = c.points.size();
      for (const auto key : {quality::QualityKey::psnr, quality::QualityKey::ssim}) {
        const std::string k = quality::quality_key_name(key);
        try {
          const auto bd = quality::bd_metrics(*anchor_it, c, key);
          entry["bd_rate_" + k + "_percent"] = bd.bd_rate_percent;
          entry["bd_" + k] = bd.bd_quality;
        } catch (const Error& e) {
          entry["error_" + k] = e.what();
        }
      }
      summary["comparisons"].push_back(entry);
    }
  }
  write_text(fs::path(o.out) / "bd_summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(o.out) / "rd_curves.csv").string() << " (" << rows.size() << " rows)\n";
  return failures ? kExitPartial : kExitOk;
}

int cmd_minutiae(const CommonOptions& o) {
  set_threads(o.threads);
  const Corpus corpus = load_corpus(o.manifest);
  const Selection sel = select_codecs(split_list(o.codecs), split_list(o.weights), split_list(o.qualities),
                                      o.external_csv, o.reconstructions);
  if (sel.points.empty()) throw ConfigError("minutiae needs reconstructions; external CSV rows carry none");
  fs::create_directories(o.out);

  std::ostringstream csv;
  csv << "codec,quality,image_id,bpp,psnr,ssim,status," << minutiae::report_csv_columns() << "\n";
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  int failures = 0;
  for (const auto& op : sel.points) {
    const auto coded = run_corpus(op, corpus, true);
    std::vector<minutiae::MinutiaeReport> reports(coded.size());
    std::vector<std::string> status(coded.size(), "ok");
    const auto n = static_cast<long>(coded.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (!coded[idx].ok) {
        status[idx] = "failed";
        continue;
      }
      try {
        reports[idx] = minutiae::evaluate_pair(corpus.images[idx], coded[idx].reconstruction);
      } catch (const NoRidgeStructureError&) {
        status[idx] = "skipped";
      } catch (const std::exception&) {
        status[idx] = "failed";
      }
    }
    minutiae::MinutiaeReport sum;
    int used = 0, skipped = 0, failed = 0;
    double bpp = 0.0, ssim = 0.0;
    for (std::size_t i = 0; i < coded.size(); ++i) {
      csv << op.codec << ',' << op.quality << ',' << corpus.entries[i].image_id() << ',';
      if (coded[i].ok) {
        csv << fmt(coded[i].bpp) << ',' << fmt(coded[i].psnr) << ',' << fmt(coded[i].ssim, "%.8f");
      } else {
        csv << ",,";
      }
      csv << ',' << status[i] << ',';
      if (status[i] != "ok") {
        csv << ",,,,,,,,,,,\n";
        (status[i] == "skipped" ? skipped : failed)++;
        if (status[i] == "failed") {
          std::cerr << "error: " << op.codec << "@" << op.quality << " " << corpus.entries[i].image_id() << ": "
                    << (coded[i].ok ? "minutiae evaluation failed" : coded[i].error) << "\n";
        }
        continue;
      }
      csv << minutiae::report_csv_values(reports[i]) << "\n";
      const auto& r = reports[i];
      ++used;
      bpp += coded[i].bpp;
      ssim += coded[i].ssim;
      sum.kept_t += r.kept_t;
      sum.kept_b += r.kept_b;
      sum.extra_t += r.extra_t;
      sum.extra_b += r.extra_b;
      sum.changed_t += r.changed_t;
      sum.changed_b += r.changed_b;
      sum.lost_t += r.lost_t;
      sum.lost_b += r.lost_b;
      sum.original_t += r.original_t;
      sum.original_b += r.original_b;
      sum.compressed_t += r.compressed_t;
      sum.compressed_b += r.compressed_b;
    }
    failures += failed;
    nlohmann::ordered_json row;
    row["codec"] = op.codec;
    row["quality"] = op.quality;
    row["images"] = used;
    row["skipped"] = skipped;
    row["failed"] = failed;
    const double u = used ? used : 1;
    row["mean_bpp"] = bpp / u;
    row["mean_ssim"] = ssim / u;
    const double orig = sum.original_total();
    row["kept_fraction"] = orig > 0 ? sum.kept() / orig : 0.0;
    row["extra_fraction"] = orig > 0 ? sum.extra() / orig : 0.0;
    row["changed_fraction"] = orig > 0 ? sum.changed() / orig : 0.0;
    row["lost_fraction"] = orig > 0 ? sum.lost() / orig : 0.0;
    nlohmann::ordered_json means;
    means["kept_t"] = sum.kept_t / u;
    means["kept_b"] = sum.kept_b / u;
    means["extra_t"] = sum.extra_t / u;
    means["extra_b"] = sum.extra_b / u;
    means["changed_t"] = sum.changed_t / u;
    means["changed_b"] = sum.changed_b / u;
    means["lost_t"] = sum.lost_t / u;
    means["lost_b"] = sum.lost_b / u;
    means["original_t"] = sum.original_t / u;
    means["original_b"] = sum.original_b / u;
    row["mean_counts"] = means;
    summary.push_back(row);
  }
  write_text(fs::path(o.out) / "minutiae.csv", csv.str());
  write_text(fs::path(o.out) / "minutiae_summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(o.out) / "minutiae.csv").string() << "\n";
  return failures ? kExitPartial : kExitOk;
}

// Inputs for encode: explicit files, or the split selected by a manifest.
struct NamedImage {
  std::string name;
  Image image;
};

int cmd_encode(const CommonOptions& o, const std::vector<std::string>& inputs, std::size_t crop) {
  set_threads(o.threads);
  const auto codecs = split_list(o.codecs);
  const std::string codec_name = codecs.empty() ? "finger-msh" : codecs.front();
  std::shared_ptr<codec::LearnedCodec> learned;
  double ratio = 0.0;
  if (codec_name == "finger-msh") {
    const auto w = split_list(o.weights);
    if (w.size() != 1) throw ConfigError("encode needs exactly one --weights file");
    if (!fs::exists(w.front())) throw ConfigError("weight file not found: " + w.front());
    learned = std::make_shared<codec::LearnedCodec>(model::load_weights_file(w.front()));
  } else if (codec_name == "wavelet") {
    const auto q = split_list(o.qualities);
    if (q.size() != 1) throw ConfigError("wavelet encode needs exactly one --qualities ratio");
    ratio = std::stod(q.front());
  } else {
    throw ConfigError("encode supports finger-msh and wavelet");
  }

  std::vector<std::pair<std::string, std::function<Image()>>> jobs;
  if (!o.manifest.empty()) {
    const Corpus c = load_corpus(o.manifest);
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      jobs.emplace_back(c.entries[i].image_id(), [img = c.images[i]] { return img; });
    }
  }
  for (const auto& in : inputs) {
    jobs.emplace_back(fs::path(in).stem().string(), [in, crop] {
      Image x = data::load_gray(in);
      return crop ? data::center_crop(x, crop) : x;
    });
  }
  if (jobs.empty()) throw ConfigError("nothing to encode (give files or --manifest)");
  fs::create_directories(o.out);

  int failures = 0;
  for (const auto& [name, load] : jobs) {
    try {
      const Image x = load();
      codec::Bitstream b;
      if (learned) {
        b = learned->encode(x).stream;
      } else {
        wavelet::WaveletConfig cfg;
        cfg.target_ratio = ratio;
        b = wavelet::encode_baseline(x, cfg).stream;
      }
      const auto bytes = codec::serialize(b);
      const fs::path out = fs::path(o.out) / (name + ".fpbs");
      write_bytes(out, bytes);
      std::cout << out.string() << " bytes=" << bytes.size() << " bpp="
                << fmt(8.0 * static_cast<double>(bytes.size()) / static_cast<double>(x.size())) << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "error: " << name << ": " << e.what() << "\n";
    }
  }
  return failures ? kExitPartial : kExitOk;
}

int cmd_decode(const CommonOptions& o, const std::vector<std::string>& inputs) {
  set_threads(o.threads);
  if (inputs.empty()) throw ConfigError("nothing to decode");
  std::shared_ptr<codec::LearnedCodec> learned;
  const auto w = split_list(o.weights);
  if (!w.empty()) {
    if (!fs::exists(w.front())) throw ConfigError("weight file not found: " + w.front());
    learned = std::make_shared<codec::LearnedCodec>(model::load_weights_file(w.front()));
  }
  fs::create_directories(o.out);
  int failures = 0;
  for (const auto& in : inputs) {
    try {
      const auto bytes = read_bytes(in);
      const codec::Bitstream b = codec::parse_bitstream(bytes);
      Image x;
      if (b.header.variant == codec::StreamVariant::wavelet) {
        x = wavelet::decode_baseline(b);
      } else {
        if (!learned) throw ConfigError("learned bitstream needs --weights");
        x = learned->decode(b);
      }
      const fs::path out = fs::path(o.out) / (fs::path(in).stem().string() + ".png");
      data::save_gray(x, out);
      std::cout << out.string() << " bytes=" << bytes.size() << " bpp="
                << fmt(8.0 * static_cast<double>(bytes.size()) / static_cast<double>(x.size())) << "\n";
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "error: " << in << ": " << e.what() << "\n";
    }
  }
  return failures ? kExitPartial : kExitOk;
}

int cmd_gen_synthetic(const std::string& out, int count, std::uint64_t seed, std::size_t size) {
  if (count <= 0) throw ConfigError("--count must be positive");
  fs::create_directories(out);
  data::SyntheticCorpus sc;
  sc.seed = seed;
  for (int s = 1; s <= count; ++s) {
    data::CorpusEntry e;
    e.subject_id = s;
    e.finger_id = 1;
    e.sample_id = 1;
    const Image x = data::gen_synthetic_fingerprint(seed * 1000003ull + static_cast<std::uint64_t>(s), size, size);
    data::save_gray(x, fs::path(out) / (e.image_id() + ".png"));
  }
  nlohmann::ordered_json m;
  m["root"] = ".";
  m["pattern"] = "s{subject}_f{finger}_n{sample}.png";
  m["crop"] = size;
  m["split"] = "test";
  write_text(fs::path(out) / "manifest.json", m.dump(2) + "\n");
  std::cout << "wrote " << count << " images and manifest.json to " << out << "\n";
  return kExitOk;
}

int cmd_init_weights(const std::string& out, const model::SeedOptions& so, float lambda) {
  auto w = model::make_seed_weights(so);
  w.lambda_tag = lambda;
  w.validate();
  model::save_weights_file(w, out);
  std::cout << out << " model_id=" << w.model_id << " hash=" << std::hex << model::weights_hash(w) << std::dec
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint compression toolkit: learned codec, wavelet baseline, minutiae evaluation"};
  app.require_subcommand(1);
  CommonOptions o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--weights", o.weights, "Weight file(s); one per operating point of finger-msh");
    sub->add_option("--manifest", o.manifest, "Corpus manifest JSON");
    sub->add_option("--codec", o.codecs, "finger-msh, wavelet, external-csv, identity, reconstructions");
    sub->add_option("--qualities", o.qualities, "Wavelet compression ratios");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads over images (0 = all cores)");
  };

  std::vector<std::string> inputs;
  std::size_t crop = 0;
  auto* encode = app.add_subcommand("encode", "Encode images to .fpbs bitstreams");
  add_common(encode);
  encode->add_option("--crop", crop, "Center-crop inputs to this side first (0 = no crop)");
  encode->add_option("inputs", inputs, "Image files (PGM or PNG)");

  auto* decode = app.add_subcommand("decode", "Decode .fpbs bitstreams to PNG");
  add_common(decode);
  decode->add_option("inputs", inputs, ".fpbs files");

  auto* bench = app.add_subcommand("bench-rd", "Rate-distortion curves and BD metrics over a corpus split");
  add_common(bench);
  bench->add_option("--anchor", o.anchor, "Codec every other curve is compared against");
  bench->add_option("--external-csv", o.external_csv, "Results of an external codec");

  auto* minut = app.add_subcommand("minutiae", "Minutiae preservation report over a corpus split");
  add_common(minut);
  minut->add_option("--reconstructions", o.reconstructions, "Directory of <image_id>.png reconstructions");

  std::string gen_out;
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  std::size_t gen_size = 320;
  auto* gen = app.add_subcommand("gen-synthetic", "Write synthetic fingerprints and a manifest");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--count", gen_count, "Number of images");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--size", gen_size, "Image side in pixels");

  std::string init_out;
  model::SeedOptions so;
  float lambda = 0.0f;
  auto* init = app.add_subcommand("init-weights", "Write deterministic seed weights");
  init->add_option("--out", init_out, "Weight file to write")->required();
  init->add_option("--seed", so.seed, "Generator seed");
  init->add_option("--latent-channels", so.latent_channels, "N");
  init->add_option("--hyper-channels", so.hyper_channels, "M");
  init->add_flag("--zero", so.zero_weights, "All kernels zero");
  init->add_option("--bias", so.bias, "Value of every bias");
  init->add_option("--lambda", lambda, "Lambda tag (0 = untagged)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*encode) return cmd_encode(o, inputs, crop);
    if (*decode) return cmd_decode(o, inputs);
    if (*bench) return cmd_bench_rd(o);
    if (*minut) return cmd_minutiae(o);
    if (*gen) return cmd_gen_synthetic(gen_out, gen_count, gen_seed, gen_size);
    if (*init) return cmd_init_weights(init_out, so, lambda);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
