#include <charconv>
#include <fstream>
#include <map>
#include <span>
#include <sstream>

#include "tsad/detectors/detector.hpp"
#include "tsad/errors.hpp"

// Text layout, one item per line:
//   tsad-detector 1
//   <spec key> <value>            (every DetectorSpec field)
//   features <D>
//   optimizer_steps <n>
//   loss_history <n> <values...>
//   norm_mean <values...> / norm_std <values...> / norm_floor <value>
//   calibration none | calibration <M> <floor>, then calibration_mean / calibration_variance
//   params <count>
//   param <name> <rank> <dims...>  followed by one line of values
//   end

namespace tsad::detectors {

namespace {

constexpr const char* kMagic = "tsad-detector";
constexpr int kVersion = 1;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << num(values[i]);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      return tokens;
    }
    fail("unexpected end of file");
  }

  std::vector<std::string> expect(const std::string& key, std::size_t min_tokens = 2) {
    auto t = next();
    if (t.empty() || t[0] != key) fail("expected '" + key + "'");
    if (t.size() < min_tokens) fail("'" + key + "' is missing its value");
    return t;
  }

  double to_double(const std::string& s) {
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  std::uint64_t to_uint(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }

  std::vector<double> doubles(const std::vector<std::string>& t, std::size_t from) {
    std::vector<double> out;
    for (std::size_t i = from; i < t.size(); ++i) out.push_back(to_double(t[i]));
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace

void save_detector(std::ostream& out, const FittedDetector& m) {
  const auto& s = m.spec;
  out << kMagic << ' ' << kVersion << '\n';
  out << "variant " << variant_id(s.variant) << '\n';
  out << "width " << s.window.width << '\n' << "stride " << s.window.stride << '\n';
  out << "hidden_size " << s.hidden_size << '\n' << "latent_dim " << s.latent_dim << '\n';
  out << "layers " << s.layers << '\n' << "epochs " << s.epochs << '\n';
  out << "learning_rate " << num(s.learning_rate) << '\n' << "horizon " << s.horizon << '\n';
  out << "mc_samples " << s.mc_samples << '\n';
  out << "alpha " << num(s.alpha) << '\n' << "beta " << num(s.beta) << '\n' << "lambda " << num(s.lambda) << '\n';
  out << "batch_size " << s.batch_size << '\n' << "noise_std " << num(s.noise_std) << '\n';
  out << "mask_rate " << num(s.mask_rate) << '\n';
  out << "pooling " << (s.pooling == Pooling::Max ? "max" : "mean") << '\n';
  out << "grad_clip " << num(s.grad_clip) << '\n' << "seed " << s.seed << '\n';
  out << "features " << m.features << '\n';
  out << "optimizer_steps " << m.optimizer_steps << '\n';
  out << "loss_history " << m.loss_history.size();
  for (double v : m.loss_history) out << ' ' << num(v);
  out << '\n';
  out << "norm_mean ";
  write_values(out, m.norm.mean);
  out << "\nnorm_std ";
  write_values(out, m.norm.std);
  out << "\nnorm_floor " << num(m.norm.std_floor) << '\n';
  if (m.calibration) {
    out << "calibration " << m.calibration->dim() << ' ' << num(m.calibration->variance_floor) << '\n';
    out << "calibration_mean ";
    write_values(out, m.calibration->mean);
    out << "\ncalibration_variance ";
    write_values(out, m.calibration->variance);
    out << '\n';
  } else {
    out << "calibration none\n";
  }
  out << "params " << m.params.size() << '\n';
  for (const auto& [name, t] : m.params) {
    out << "param " << name << ' ' << t.shape().size();
    for (auto dim : t.shape()) out << ' ' << dim;
    out << '\n';
    write_values(out, t.values());
    out << '\n';
  }
  out << "end\n";
}

FittedDetector load_detector(std::istream& in) {
  Reader r(in);
  const auto header = r.next();
  if (header.size() != 2 || header[0] != kMagic) r.fail("not a detector file");
  if (r.to_uint(header[1]) != static_cast<std::uint64_t>(kVersion)) r.fail("unsupported version " + header[1]);

  FittedDetector m;
  auto& s = m.spec;
  try {
    s.variant = parse_variant(r.expect("variant")[1]);
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  s.window.width = r.to_uint(r.expect("width")[1]);
  s.window.stride = r.to_uint(r.expect("stride")[1]);
  s.hidden_size = r.to_uint(r.expect("hidden_size")[1]);
  s.latent_dim = r.to_uint(r.expect("latent_dim")[1]);
  s.layers = r.to_uint(r.expect("layers")[1]);
  s.epochs = r.to_uint(r.expect("epochs")[1]);
  s.learning_rate = r.to_double(r.expect("learning_rate")[1]);
  s.horizon = r.to_uint(r.expect("horizon")[1]);
  s.mc_samples = r.to_uint(r.expect("mc_samples")[1]);
  s.alpha = r.to_double(r.expect("alpha")[1]);
  s.beta = r.to_double(r.expect("beta")[1]);
  s.lambda = r.to_double(r.expect("lambda")[1]);
  s.batch_size = r.to_uint(r.expect("batch_size")[1]);
  s.noise_std = r.to_double(r.expect("noise_std")[1]);
  s.mask_rate = r.to_double(r.expect("mask_rate")[1]);
  const auto pooling = r.expect("pooling")[1];
  if (pooling != "max" && pooling != "mean") r.fail("pooling must be max or mean");
  s.pooling = pooling == "max" ? Pooling::Max : Pooling::Mean;
  s.grad_clip = r.to_double(r.expect("grad_clip")[1]);
  s.seed = r.to_uint(r.expect("seed")[1]);
  m.features = r.to_uint(r.expect("features")[1]);
  m.optimizer_steps = r.to_uint(r.expect("optimizer_steps")[1]);
  const auto hist = r.expect("loss_history");
  m.loss_history = r.doubles(hist, 2);
  if (m.loss_history.size() != r.to_uint(hist[1])) r.fail("loss_history count mismatch");
  m.norm.mean = r.doubles(r.expect("norm_mean", 1), 1);
  m.norm.std = r.doubles(r.expect("norm_std", 1), 1);
  m.norm.std_floor = r.to_double(r.expect("norm_floor")[1]);
  if (m.norm.mean.size() != m.features || m.norm.std.size() != m.features) r.fail("normalization width != features");
  const auto cal = r.expect("calibration");
  if (cal[1] != "none") {
    if (cal.size() != 3) r.fail("calibration needs dimension and floor");
    scoring::GaussianModel g;
    const auto dim = r.to_uint(cal[1]);
    g.variance_floor = r.to_double(cal[2]);
    g.mean = r.doubles(r.expect("calibration_mean", 1), 1);
    g.variance = r.doubles(r.expect("calibration_variance", 1), 1);
    if (g.mean.size() != dim || g.variance.size() != dim) r.fail("calibration dimension mismatch");
    m.calibration = std::move(g);
  }
  const auto count = r.to_uint(r.expect("params")[1]);
  m.params = numkit::ParamStore(s.seed);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto p = r.expect("param", 3);
    const auto rank = r.to_uint(p[2]);
    if (p.size() != 3 + rank) r.fail("param " + p[1] + ": rank does not match dimensions");
    numkit::Shape shape;
    for (std::size_t k = 0; k < rank; ++k) shape.push_back(r.to_uint(p[3 + k]));
    auto values = r.doubles(r.next(), 0);
    if (values.size() != numkit::shape_size(shape)) r.fail("param " + p[1] + ": wrong number of values");
    try {
      m.params.insert(p[1], numkit::Tensor(shape, std::move(values)));
    } catch (const ContractError& e) {
      r.fail(e.what());
    }
  }
  if (r.next() != std::vector<std::string>{"end"}) r.fail("expected 'end'");

  try {
    validate_spec(s);
    const auto expected = initial_params(s, m.features);
    if (expected.names() != m.params.names()) r.fail("parameter names do not match the variant");
    for (const auto& [name, t] : expected) {
      if (t.shape() != m.params.get(name).shape()) r.fail("parameter " + name + " has the wrong shape");
    }
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  return m;
}

void save_detector(const std::filesystem::path& path, const FittedDetector& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  save_detector(out, model);
  if (!out) throw DataError("write failed for " + path.string());
}

FittedDetector load_detector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_detector(in);
}

}  // namespace tsad::detectors
