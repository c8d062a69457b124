#include "wglab/vector_fields.hpp"

#include <algorithm>
#include <cmath>

#include "wglab/errors.hpp"
#include "wglab/numerics.hpp"

namespace wglab {

std::string VectorFieldId::name() const {
  switch (kind) {
    case FieldKind::Time:
      return "d_t";
    case FieldKind::Space:
      return "d_x" + std::to_string(i);
    case FieldKind::Rotation:
      return "Omega_" + std::to_string(i) + std::to_string(j);
    case FieldKind::Boost:
      return "Omega_0" + std::to_string(j);
    case FieldKind::CrossSection:
      return "d_y" + std::to_string(i);
    case FieldKind::Scaling:
      return "L";
  }
  return "?";
}

void VectorFieldId::validate(int n, int d, bool has_time) const {
  auto bad = [&](const std::string& why) { throw ValidationError("vector field " + name() + ": " + why); };
  switch (kind) {
    case FieldKind::Time:
      if (!has_time) bad("sample has no time axis");
      break;
    case FieldKind::Space:
      if (i < 1 || i > n) bad("index out of range");
      break;
    case FieldKind::Rotation:
      if (!(1 <= i && i < j && j <= n)) bad("needs 1 <= j < k <= n");
      break;
    case FieldKind::Boost:
      if (!has_time) bad("sample has no time axis");
      if (j < 1 || j > n) bad("index out of range");
      break;
    case FieldKind::CrossSection:
      if (i < 1 || i > d) bad("index out of range");
      break;
    case FieldKind::Scaling:
      if (!has_time) bad("sample has no time axis");
      break;
  }
}

std::vector<VectorFieldId> commuting_fields(int n, int d) {
  std::vector<VectorFieldId> out{VectorFieldId::time()};
  for (int i = 1; i <= n; ++i) out.push_back(VectorFieldId::space(i));
  for (int j = 1; j <= n; ++j) {
    for (int k = j + 1; k <= n; ++k) out.push_back(VectorFieldId::rotation(j, k));
  }
  for (int j = 1; j <= n; ++j) out.push_back(VectorFieldId::boost(j));
  for (int l = 1; l <= d; ++l) out.push_back(VectorFieldId::cross_section(l));
  return out;
}

SpacetimeSample::SpacetimeSample(bool has_time, int n, int d, double spacing, std::vector<int> extent,
                                 std::vector<double> lower)
    : has_time_(has_time), n_(n), d_(d), h_(spacing), extent_(std::move(extent)), lower_(std::move(lower)) {
  const int ax = (has_time ? 1 : 0) + n + d;
  if (n < 1 || d < 0 || ax != static_cast<int>(extent_.size()) || ax != static_cast<int>(lower_.size())) {
    throw ValidationError("lattice axes do not match (t, x, y) layout");
  }
  if (!(spacing > 0.0)) throw ValidationError("lattice spacing must be positive");
  std::size_t total = 1;
  for (int e : extent_) {
    if (e < 1) throw ValidationError("lattice became empty");
    total *= static_cast<std::size_t>(e);
  }
  const double cap = std::pow(33.0, n + 1);
  if (static_cast<double>(total) > cap) throw ValidationError("lattice exceeds 33^(n+1) points");
  stride_.assign(extent_.size(), 1);
  for (int a = ax - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * static_cast<std::size_t>(extent_[a + 1]);
  values_.assign(total, 0.0);
}

SpacetimeSample SpacetimeSample::centred(bool has_time, int n, int d, double spacing, int half, const Function& f) {
  const int ax = (has_time ? 1 : 0) + n + d;
  SpacetimeSample s(has_time, n, d, spacing, std::vector<int>(ax, 2 * half + 1),
                    std::vector<double>(ax, -half * spacing));
  std::vector<double> c(static_cast<std::size_t>(ax));
  for (std::size_t k = 0; k < s.total(); ++k) {
    s.coordinates(k, c);
    s.values_[k] = f(c);
  }
  return s;
}

void SpacetimeSample::coordinates(std::size_t k, std::span<double> out) const {
  for (int a = 0; a < axes(); ++a) {
    const std::size_t idx = (k / stride_[a]) % static_cast<std::size_t>(extent_[a]);
    out[a] = lower_[a] + static_cast<double>(idx) * h_;
  }
}

namespace {

// Calls fn(out_index, in_index) for every point of the lattice cropped by w.
template <typename Fn>
void for_each_cropped(const SpacetimeSample& s, int w, const SpacetimeSample& out, Fn&& fn) {
  const int ax = s.axes();
  std::vector<int> idx(static_cast<std::size_t>(ax), 0);
  std::size_t base = 0;
  for (int a = 0; a < ax; ++a) base += static_cast<std::size_t>(w) * s.stride(a);
  for (std::size_t k = 0; k < out.total(); ++k) {
    std::size_t in = base;
    for (int a = 0; a < ax; ++a) in += static_cast<std::size_t>(idx[a]) * s.stride(a);
    fn(k, in);
    for (int a = ax - 1; a >= 0; --a) {
      if (++idx[a] < out.extent(a)) break;
      idx[a] = 0;
    }
  }
}

SpacetimeSample blank_cropped(const SpacetimeSample& s, int w) {
  std::vector<int> ext;
  std::vector<double> low;
  for (int a = 0; a < s.axes(); ++a) {
    const int e = s.extent(a) - 2 * w;
    if (e < 1) throw ValidationError("lattice exhausted: too few points for the stencil");
    ext.push_back(e);
    low.push_back(s.lower(a) + w * s.spacing());
  }
  return SpacetimeSample(s.has_time(), s.n(), s.d(), s.spacing(), ext, low);
}

SpacetimeSample first_difference(const SpacetimeSample& s, int axis) {
  SpacetimeSample out = blank_cropped(s, 1);
  const std::size_t st = s.stride(axis);
  const double inv = 1.0 / (2.0 * s.spacing());
  const auto& v = s.values();
  auto& o = out.values();
  for_each_cropped(s, 1, out, [&](std::size_t k, std::size_t in) { o[k] = (v[in + st] - v[in - st]) * inv; });
  return out;
}

SpacetimeSample second_difference(const SpacetimeSample& s, int axis) {
  SpacetimeSample out = blank_cropped(s, 1);
  const std::size_t st = s.stride(axis);
  const double inv = 1.0 / (s.spacing() * s.spacing());
  const auto& v = s.values();
  auto& o = out.values();
  for_each_cropped(s, 1, out, [&](std::size_t k, std::size_t in) {
    o[k] = (v[in + st] - 2.0 * v[in] + v[in - st]) * inv;
  });
  return out;
}

// Pointwise multiplication by the coordinate along `axis`.
SpacetimeSample times_coordinate(const SpacetimeSample& s, int axis) {
  SpacetimeSample out = s;
  auto& o = out.values();
  const std::size_t st = s.stride(axis);
  const auto ext = static_cast<std::size_t>(s.extent(axis));
  for (std::size_t k = 0; k < o.size(); ++k) {
    const std::size_t idx = (k / st) % ext;
    o[k] *= s.lower(axis) + static_cast<double>(idx) * s.spacing();
  }
  return out;
}

}  // namespace

SpacetimeSample SpacetimeSample::cropped(int width) const {
  SpacetimeSample out = blank_cropped(*this, width);
  for_each_cropped(*this, width, out, [&](std::size_t k, std::size_t in) { out.values_[k] = values_[in]; });
  return out;
}

SpacetimeSample SpacetimeSample::operator+(const SpacetimeSample& o) const {
  if (extent_ != o.extent_ || lower_ != o.lower_) throw ValidationError("lattice mismatch in sum");
  SpacetimeSample out = *this;
  for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] += o.values_[k];
  return out;
}

SpacetimeSample SpacetimeSample::operator-(const SpacetimeSample& o) const { return *this + o * -1.0; }

SpacetimeSample SpacetimeSample::operator*(double c) const {
  SpacetimeSample out = *this;
  for (auto& v : out.values_) v *= c;
  return out;
}

double SpacetimeSample::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpacetimeSample apply_field(const VectorFieldId& id, const SpacetimeSample& s) {
  id.validate(s.n(), s.d(), s.has_time());
  switch (id.kind) {
    case FieldKind::Time:
      return first_difference(s, s.time_axis());
    case FieldKind::Space:
      return first_difference(s, s.x_axis(id.i));
    case FieldKind::CrossSection:
      return first_difference(s, s.y_axis(id.i));
    case FieldKind::Rotation: {
      const int a = s.x_axis(id.i), b = s.x_axis(id.j);
      return times_coordinate(first_difference(s, b), a) - times_coordinate(first_difference(s, a), b);
    }
    case FieldKind::Boost: {
      const int t = s.time_axis(), a = s.x_axis(id.j);
      return times_coordinate(first_difference(s, t), a) + times_coordinate(first_difference(s, a), t);
    }
    case FieldKind::Scaling: {
      const int t = s.time_axis();
      SpacetimeSample out = times_coordinate(first_difference(s, t), t);
      for (int i = 1; i <= s.n(); ++i) out = out + times_coordinate(first_difference(s, s.x_axis(i)), s.x_axis(i));
      return out;
    }
  }
  throw ValidationError("unknown vector field");
}

SpacetimeSample apply_klein_gordon(const SpacetimeSample& s, double mu) {
  if (!s.has_time()) throw ValidationError("Klein-Gordon operator needs a time axis");
  SpacetimeSample out = second_difference(s, s.time_axis());
  for (int i = 1; i <= s.n(); ++i) out = out - second_difference(s, s.x_axis(i));
  for (int l = 1; l <= s.d(); ++l) out = out - second_difference(s, s.y_axis(l));
  if (mu != 0.0) out = out + s.cropped(1) * (mu * mu);
  return out;
}

namespace {
SpacetimeSample commutator(const VectorFieldId& id, double mu, const SpacetimeSample& s) {
  return apply_klein_gordon(apply_field(id, s), mu) - apply_field(id, apply_klein_gordon(s, mu));
}
}  // namespace

double commutator_residual(const VectorFieldId& id, double mu, const SpacetimeSample& s) {
  SpacetimeSample c = commutator(id, mu, s);
  if (id.kind == FieldKind::Scaling) {
    // L = t d_t + r d_r leaves d_y and mu^2 alone, so only the (t, x) wave operator doubles.
    SpacetimeSample box = second_difference(s, s.time_axis());
    for (int i = 1; i <= s.n(); ++i) box = box - second_difference(s, s.x_axis(i));
    c = c - box.cropped(1) * 2.0;
  }
  return c.max_abs();
}

double naive_commutator_residual(const VectorFieldId& id, double mu, const SpacetimeSample& s) {
  return commutator(id, mu, s).max_abs();
}

double stencil_tolerance(const SpacetimeSample& s) {
  return kStencilConstant * s.spacing() * s.spacing() * s.max_abs();
}

EstimateReport klainerman_sobolev_ratio(const SpacetimeSample& h, double R) {
  if (h.has_time() || h.n() != 3 || h.d() != 0) {
    throw ValidationError("Klainerman-Sobolev ratio needs a spatial lattice in R^3");
  }
  if (!(R >= 1.0)) throw ValidationError("radius R must be at least 1");

  // Z^alpha h for |alpha| <= 2, all on the lattice cropped by two.
  std::vector<VectorFieldId> zs;
  for (int i = 1; i <= 3; ++i) zs.push_back(VectorFieldId::space(i));
  for (int j = 1; j <= 3; ++j) {
    for (int k = j + 1; k <= 3; ++k) zs.push_back(VectorFieldId::rotation(j, k));
  }
  std::vector<SpacetimeSample> terms{h.cropped(2)};
  for (const auto& z1 : zs) {
    SpacetimeSample once = apply_field(z1, h);
    terms.push_back(once.cropped(1));
    for (const auto& z2 : zs) terms.push_back(apply_field(z2, once));
  }

  const SpacetimeSample& base = terms.front();
  std::vector<double> c(3);
  // The cropped lattice must reach |x| = R + 1 along every axis.
  for (int a = 0; a < 3; ++a) {
    const double lo = base.lower(a), hi = lo + (base.extent(a) - 1) * base.spacing();
    if (lo > -(R + 1.0) || hi < R + 1.0) throw ValidationError("lattice does not cover the annulus neighbourhood");
  }
  const double cell = std::pow(h.spacing(), 3);
  double sup = 0.0;
  bool any = false;
  std::vector<CompensatedSum> sums(terms.size());
  for (std::size_t k = 0; k < base.total(); ++k) {
    base.coordinates(k, c);
    const double r = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    if (r >= R - 1.0 && r <= R) {
      any = true;
      sup = std::max(sup, std::abs(base.values()[k]));
    }
    if (r >= R - 2.0 && r <= R + 1.0) {
      for (std::size_t m = 0; m < terms.size(); ++m) {
        const double v = terms[m].values()[k];
        sums[m].add(v * v * cell);
      }
    }
  }
  if (!any) throw ValidationError("annulus R-1 <= |x| <= R holds no lattice points");
  CompensatedSum rhs;
  double rotation_part = 0.0;
  for (std::size_t m = 0; m < terms.size(); ++m) {
    const double norm = std::sqrt(sums[m].value());
    rhs.add(norm);
    // Terms whose first field is a rotation: indices 1 + 7*z1 (+1..6) for z1 >= 3.
    if (m >= 1 && (m - 1) / 7 >= 3) rotation_part += norm;
  }
  EstimateReport rep;
  rep.name = "klainerman_sobolev";
  rep.set_sides(R * sup, rhs.value());
  rep.add_param("R", R);
  rep.add_param("spacing", h.spacing());
  rep.add_param("rotation_terms", rotation_part);
  rep.pass = !rep.degenerate || rep.lhs == 0.0;
  return rep;
}

}  // namespace wglab
