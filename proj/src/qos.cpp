#include "passwpt/qos.hpp"

#include <cmath>

namespace passwpt {

VectorXd pack_beamformer(const BeamformingMatrix& w) {
  const int n = w.antennas() * w.users();
  VectorXd x(2 * n);
  for (int k = 0; k < w.users(); ++k) {
    for (int i = 0; i < w.antennas(); ++i) {
      x[k * w.antennas() + i] = w.w(i, k).real();
      x[n + k * w.antennas() + i] = w.w(i, k).imag();
    }
  }
  return x;
}

BeamformingMatrix unpack_beamformer(const VectorXd& x, int antennas, int users) {
  const int n = antennas * users;
  if (x.size() != 2 * n) throw Error(ErrorCode::DimensionMismatch, "packed beamformer length");
  BeamformingMatrix w;
  w.w.resize(antennas, users);
  for (int k = 0; k < users; ++k) {
    for (int i = 0; i < antennas; ++i) w.w(i, k) = {x[k * antennas + i], x[n + k * antennas + i]};
  }
  return w;
}

VectorXcd beam_row(const VectorXcd& c, int j, int antennas, int users) {
  const int n = antennas * users;
  VectorXcd row = VectorXcd::Zero(2 * n);
  for (int i = 0; i < antennas; ++i) {
    const cplx coef = std::conj(c[i]);
    row[j * antennas + i] = coef;
    row[n + j * antennas + i] = coef * cplx(0.0, 1.0);
  }
  return row;
}

MatrixXd real_gram(const VectorXcd& row) {
  const VectorXd re = row.real();
  const VectorXd im = row.imag();
  return re * re.transpose() + im * im.transpose();
}

void add_sinr_cone(QcqpProblem& p, const VectorXcd& desired, const std::vector<VectorXcd>& interference,
                   double gamma, double noise, double theta, const std::string& label) {
  const int n = p.dimension();
  const double sg = std::sqrt(gamma);
  const auto rows = static_cast<Eigen::Index>(2 * interference.size() + 1);
  MatrixXd a = MatrixXd::Zero(rows, n);
  VectorXd b = VectorXd::Zero(rows);
  for (std::size_t j = 0; j < interference.size(); ++j) {
    a.row(static_cast<Eigen::Index>(2 * j)) = sg * interference[j].real().transpose();
    a.row(static_cast<Eigen::Index>(2 * j + 1)) = sg * interference[j].imag().transpose();
  }
  b[rows - 1] = sg * std::sqrt(noise);
  const VectorXd c = (desired * std::polar(1.0, -theta)).real();
  p.add_soc(std::move(a), std::move(b), c, 0.0, label);
}

void add_energy_tangent(QcqpProblem& p, const std::vector<VectorXcd>& rows, const VectorXd& x_ref,
                        double floor, const std::string& label) {
  VectorXd a = VectorXd::Zero(p.dimension());
  double offset = 0.0;
  const VectorXcd xr = x_ref.cast<cplx>();
  for (const auto& r : rows) {
    const cplx z = r.transpose() * xr;
    a += 2.0 * (std::conj(z) * r).real();
    offset += std::norm(z);
  }
  // -a^T x <= -(floor + offset)
  p.add_linear(-a, -(floor + offset), label);
}

double form_phase(const VectorXcd& row, const VectorXd& x) {
  const cplx z = row.transpose() * x.cast<cplx>();
  return std::abs(z) > 0.0 ? std::arg(z) : 0.0;
}

std::vector<VectorXcd> interference_rows(const std::vector<VectorXcd>& rows, int k) {
  std::vector<VectorXcd> out;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (static_cast<int>(j) != k) out.push_back(rows[j]);
  }
  return out;
}

}  // namespace passwpt
