#include "flowsplit/vector_field.hpp"

#include <cmath>
#include <sstream>

namespace flowsplit {

VectorFieldSystem::VectorFieldSystem(std::size_t dim, std::vector<VectorField> fields,
                                     std::span<const Vector> sample_points)
    : dim_(dim), fields_(std::move(fields)) {
  if (dim_ == 0) throw Error(Errc::invalid_argument, "vector field system needs dimension >= 1");
  if (fields_.empty()) throw Error(Errc::invalid_argument, "vector field system needs a drift field");
  for (const auto& f : fields_) {
    if (!f.value || !f.jacobian) throw Error(Errc::invalid_argument, "every field needs a value and a Jacobian");
  }
  for (const Vector& p : sample_points) {
    if (p.size() != dim_) throw Error(Errc::dimension_mismatch, "sample point has wrong dimension");
    for (std::size_t r = 0; r < fields_.size(); ++r) {
      const Vector v = fields_[r].value(p);
      const Matrix j = fields_[r].jacobian(p);
      if (v.size() != dim_ || j.rows() != dim_ || j.cols() != dim_) {
        throw Error(Errc::dimension_mismatch, "field " + std::to_string(r) + " returns the wrong shape");
      }
      for (double e : v) {
        if (!std::isfinite(e)) throw Error(Errc::invalid_argument, "field " + std::to_string(r) + " not finite at sample point");
      }
      Vector xp = p;
      Vector xm = p;
      for (std::size_t c = 0; c < dim_; ++c) {
        xp[c] = p[c] + kCheckStep;
        xm[c] = p[c] - kCheckStep;
        const Vector fp = fields_[r].value(xp);
        const Vector fm = fields_[r].value(xm);
        xp[c] = xm[c] = p[c];
        for (std::size_t i = 0; i < dim_; ++i) {
          const double fd = (fp[i] - fm[i]) / (2.0 * kCheckStep);
          if (std::abs(fd - j(i, c)) > kCheckTolerance * std::max(1.0, std::abs(j(i, c)))) {
            std::ostringstream os;
            os << "Jacobian of field " << r << " entry (" << i + 1 << "," << c + 1 << ") = " << j(i, c)
               << " disagrees with finite difference " << fd;
            throw Error(Errc::invalid_argument, os.str());
          }
        }
      }
    }
  }
}

}  // namespace flowsplit
