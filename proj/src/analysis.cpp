#include "oamsq/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace oamsq {

double IntensityImage::peak() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

void IntensityImage::validate() const {
  if (nx == 0 || ny == 0 || values.size() != nx * ny)
    throw Error(ErrorKind::InvalidArgument, "image dimensions do not match its data");
  if (!(pitch > 0)) throw Error(ErrorKind::InvalidArgument, "image pitch must be > 0");
}

IntensityImage image_from_field(const ComplexField2D& field) {
  const Grid& g = field.grid();
  if (g.dx() != g.dy()) throw Error(ErrorKind::InvalidArgument, "images need square pixels");
  return IntensityImage{g.nx(), g.ny(), g.dx(), field.intensity(), 0.0};
}

double profile_value(BeamModel model, const ProfileParams& p, double x, double y) {
  const double dx = x - p[2], dy = y - p[3];
  const double t = 2.0 * (dx * dx + dy * dy) / (p[1] * p[1]);
  return model == BeamModel::Gaussian ? p[0] * std::exp(-t) : p[0] * t * std::exp(-t);
}

ProfileParams profile_jacobian(BeamModel model, const ProfileParams& p, double x, double y) {
  const double w = p[1];
  const double dx = x - p[2], dy = y - p[3];
  const double t = 2.0 * (dx * dx + dy * dy) / (w * w);
  const double e = std::exp(-t);
  // value = I0 f(t); chain through t(w, x0, y0)
  const double f = model == BeamModel::Gaussian ? e : t * e;
  const double df = model == BeamModel::Gaussian ? -e : e * (1.0 - t);
  const double a = p[0] * df;
  return {f, a * (-2.0 * t / w), a * (-4.0 * dx / (w * w)), a * (-4.0 * dy / (w * w))};
}

namespace {

struct Window {
  std::size_t x0, x1, y0, y1;  // half-open
};

struct Normal {
  double cost = 0.0;
  Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
  Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
};

Normal evaluate(const IntensityImage& img, const Window& win, BeamModel model, const ProfileParams& p) {
  Normal n;
  for (std::size_t iy = win.y0; iy < win.y1; ++iy) {
    const double y = img.y(iy);
    for (std::size_t ix = win.x0; ix < win.x1; ++ix) {
      const double x = img.x(ix);
      const double r = img.at(ix, iy) - profile_value(model, p, x, y);
      const ProfileParams j = profile_jacobian(model, p, x, y);
      const Eigen::Vector4d jv(j[0], j[1], j[2], j[3]);
      n.cost += r * r;
      n.jtj.selfadjointView<Eigen::Lower>().rankUpdate(jv);
      n.jtr += jv * r;
    }
  }
  n.jtj = n.jtj.selfadjointView<Eigen::Lower>();
  return n;
}

ProfileParams initial_guess(const IntensityImage& img, BeamModel model) {
  const double peak = img.peak();
  const double floor = 0.05 * peak;
  double sum = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t iy = 0; iy < img.ny; ++iy)
    for (std::size_t ix = 0; ix < img.nx; ++ix) {
      const double v = img.at(ix, iy);
      if (v < floor) continue;
      sum += v;
      sx += v * img.x(ix);
      sy += v * img.y(iy);
    }
  const double cx = sx / sum, cy = sy / sum;
  if (model == BeamModel::Gaussian) {
    double s2 = 0.0;
    for (std::size_t iy = 0; iy < img.ny; ++iy)
      for (std::size_t ix = 0; ix < img.nx; ++ix) {
        const double v = img.at(ix, iy);
        if (v < floor) continue;
        const double dx = img.x(ix) - cx, dy = img.y(iy) - cy;
        s2 += v * (dx * dx + dy * dy);
      }
    // The 5% cut trims the tails; 2 <rho^2> still lands inside the basin.
    return {peak, std::max(std::sqrt(2.0 * s2 / sum), 2.0 * img.pitch), cx, cy};
  }
  // Ring radius from the azimuthally averaged profile.
  const std::size_t bins = std::max(img.nx, img.ny);
  std::vector<double> acc(bins, 0.0), cnt(bins, 0.0);
  for (std::size_t iy = 0; iy < img.ny; ++iy)
    for (std::size_t ix = 0; ix < img.nx; ++ix) {
      const double rho = std::hypot(img.x(ix) - cx, img.y(iy) - cy) / img.pitch;
      const auto b = static_cast<std::size_t>(rho);
      if (b >= bins) continue;
      acc[b] += img.at(ix, iy);
      cnt[b] += 1.0;
    }
  std::size_t best = 0;
  double best_v = -1.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (cnt[b] == 0) continue;
    const double v = acc[b] / cnt[b];
    if (v > best_v) best_v = v, best = b;
  }
  const double ring = (static_cast<double>(best) + 0.5) * img.pitch;
  return {peak * std::exp(1.0), std::sqrt(2.0) * ring, cx, cy};
}

Window fit_window(const IntensityImage& img, const ProfileParams& p) {
  const double half = 5.0 * p[1];
  auto clip = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  const double ox = static_cast<double>(img.nx / 2), oy = static_cast<double>(img.ny / 2);
  return {clip(std::floor((p[2] - half) / img.pitch + ox), img.nx),
          clip(std::ceil((p[2] + half) / img.pitch + ox) + 1, img.nx),
          clip(std::floor((p[3] - half) / img.pitch + oy), img.ny),
          clip(std::ceil((p[3] + half) / img.pitch + oy) + 1, img.ny)};
}

double max_relative_step(const Eigen::Vector4d& d, const ProfileParams& p) {
  return std::max({std::abs(d[0] / p[0]), std::abs(d[1] / p[1]), std::abs(d[2] / p[1]), std::abs(d[3] / p[1])});
}

}  // namespace

FitResult fit_profile(const IntensityImage& image, BeamModel model) {
  image.validate();
  const double peak = image.peak();
  const auto bright = std::count_if(image.values.begin(), image.values.end(),
                                    [&](double v) { return v > 0.05 * peak; });
  if (!(peak > 0) || bright < 100)
    throw Error(ErrorKind::DegenerateImage, "fewer than 100 pixels above 5% of the peak");

  ProfileParams p = initial_guess(image, model);
  const Window win = fit_window(image, p);
  Normal cur = evaluate(image, win, model, p);
  double lambda = 1e-3;
  FitResult out;
  out.model = model;
  int it = 0;
  for (; it < kMaxFitIterations; ++it) {
    Eigen::Matrix4d a = cur.jtj;
    a.diagonal() *= 1.0 + lambda;
    const Eigen::Vector4d step = a.ldlt().solve(cur.jtr);
    const double rel = max_relative_step(step, p);
    if (!std::isfinite(rel)) break;
    const ProfileParams trial{p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]};
    if (trial[1] > 0 && trial[0] > 0) {
      Normal next = evaluate(image, win, model, trial);
      if (next.cost <= cur.cost) {
        p = trial;
        cur = std::move(next);
        lambda = std::max(lambda * 0.1, 1e-12);
        if (rel < kFitStepTolerance) {
          out.converged = true;
          break;
        }
        continue;
      }
    }
    if (rel < kFitStepTolerance) {  // at the optimum to rounding
      out.converged = true;
      break;
    }
    lambda *= 10.0;
  }
  out.iterations = it + 1;
  out.I0 = p[0];
  out.w = p[1];
  out.x0 = p[2];
  out.y0 = p[3];
  const double n = static_cast<double>((win.x1 - win.x0) * (win.y1 - win.y0));
  out.residual = std::sqrt(cur.cost / n) / peak;
  return out;
}

double waist_ratio(const FitResult& fit, const FitResult& reference) {
  if (fit.model != reference.model) throw Error(ErrorKind::ModelMismatch, "waist ratio of different fit models");
  if (!fit.converged || !reference.converged) throw Error(ErrorKind::NotConverged, "waist ratio of unconverged fit");
  return fit.w / reference.w;
}

namespace {

void subtract_background(IntensityImage& img) {
  std::vector<double> sorted = img.values;
  const auto k = static_cast<std::size_t>(0.05 * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  img.background = sorted[k];
  for (double& v : img.values) v = std::max(0.0, v - img.background);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

IntensityImage parse_pgm(const std::string& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorKind::CorruptFile, "bad PGM header in " + path.string());
    return std::stol(bytes.substr(start, pos - start));
  };
  const long w = next_token(), h = next_token(), maxval = next_token();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw Error(ErrorKind::CorruptFile, "bad PGM dimensions in " + path.string());
  ++pos;  // single whitespace before the raster
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (pos > bytes.size() || bytes.size() - pos < n * bpp)
    throw Error(ErrorKind::CorruptFile, "truncated PGM raster in " + path.string());
  IntensityImage img;
  img.nx = static_cast<std::size_t>(w);
  img.ny = static_cast<std::size_t>(h);
  img.values.resize(n);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < n; ++i)
    img.values[i] = bpp == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return img;
}

bool parse_number_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    if (b == std::string::npos) return false;
    const std::string t = cell.substr(b, e - b + 1);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) return false;
    row.push_back(v);
  }
  return !row.empty();
}

IntensityImage parse_csv(const std::string& text, const std::filesystem::path& path) {
  std::stringstream ss(text);
  std::string line;
  std::vector<double> row;
  IntensityImage img;
  bool first = true;
  while (std::getline(ss, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_number_row(line, row)) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorKind::CorruptFile, "non-numeric CSV row in " + path.string());
    }
    first = false;
    if (img.nx == 0) img.nx = row.size();
    if (row.size() != img.nx) throw Error(ErrorKind::CorruptFile, "ragged CSV matrix in " + path.string());
    img.values.insert(img.values.end(), row.begin(), row.end());
    ++img.ny;
  }
  if (img.ny == 0) throw Error(ErrorKind::CorruptFile, "empty CSV matrix in " + path.string());
  return img;
}

}  // namespace

IntensityImage ingest_image(const std::filesystem::path& path, double pitch) {
  if (!(pitch > 0)) throw Error(ErrorKind::InvalidArgument, "image pitch must be > 0");
  const std::string bytes = read_all(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  IntensityImage img;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    img = parse_pgm(bytes, path);
  } else if (ext == ".csv" || ext == ".txt") {
    img = parse_csv(bytes, path);
  } else {
    throw Error(ErrorKind::UnsupportedFormat, "not a P5 graymap or CSV matrix: " + path.string());
  }
  img.pitch = pitch;
  for (double v : img.values)
    if (v < 0) throw Error(ErrorKind::CorruptFile, "negative intensity in " + path.string());
  subtract_background(img);
  return img;
}

void render_image(const ComplexField2D& field, const std::filesystem::path& path) {
  write_intensity_pgm(field, path);
}

void render_image(const IntensityImage& image, const std::filesystem::path& path) {
  image.validate();
  write_pgm16(image.values, image.nx, image.ny, path);
}

void write_fit_csv_header(std::ostream& os) { os << "model,w_m,I0,x0_m,y0_m,residual,converged\n"; }

void write_fit_csv_row(std::ostream& os, const FitResult& f) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%.6g,%d\n", std::string(to_string(f.model)).c_str(),
                f.w, f.I0, f.x0, f.y0, f.residual, f.converged ? 1 : 0);
  os << buf;
}

void write_fit_csv(const std::vector<FitResult>& fits, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  write_fit_csv_header(os);
  for (const auto& f : fits) write_fit_csv_row(os, f);
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace oamsq
