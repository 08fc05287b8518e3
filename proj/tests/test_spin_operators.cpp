#include "support/oracles.hpp"
#include "thermosep/errors.hpp"
#include "thermosep/spin_operators.hpp"

#include <doctest.h>

using namespace thermosep;

namespace {

double dist(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

LocalTerm zz(double coefficient = 1.0) {
  return {coefficient,
          {{0, SiteMatrix::named(SiteMatrixId::sigma_z)}, {1, SiteMatrix::named(SiteMatrixId::sigma_z)}}};
}

} // namespace

TEST_CASE("single site matrices") {
  CHECK(dist(single_site_matrix(SiteMatrixId::sigma_z, 2), oracle::pauli('z')) == 0.0);
  CHECK(dist(single_site_matrix(SiteMatrixId::sigma_x, 2), oracle::pauli('x')) == 0.0);
  CHECK(dist(single_site_matrix(SiteMatrixId::sigma_y, 2), oracle::pauli('y')) == 0.0);
  CHECK(dist(single_site_matrix(SiteMatrixId::identity, 3), CMatrix::Identity(3, 3)) == 0.0);
  CHECK_THROWS_AS(single_site_matrix(SiteMatrixId::sigma_x, 3), PreconditionError);
  CHECK(site_matrix_id_from_name("sigma_y") == SiteMatrixId::sigma_y);
  CHECK(site_matrix_id_from_name("z") == SiteMatrixId::sigma_z);
  CHECK_THROWS_AS(site_matrix_id_from_name("sigma_w"), PreconditionError);
}

TEST_CASE("embed_term places factors by offset") {
  ModelSpec m;
  m.n_sites = 2;
  m.terms = {zz()};
  const auto op0 = embed_term(zz(), 0, m);
  CHECK(dist(op0.matrix, oracle::kron(oracle::pauli('z'), oracle::pauli('z'))) == 0.0);

  // base 1 on a 2-ring wraps to (1, 0): same matrix after the swap
  const auto op1 = embed_term(zz(), 1, m);
  CHECK(dist(op1.matrix, op0.matrix) == 0.0);

  LocalTerm zx{1.0, {{0, SiteMatrix::named(SiteMatrixId::sigma_z)}, {1, SiteMatrix::named(SiteMatrixId::sigma_x)}}};
  m.n_sites = 3;
  const auto wrapped = embed_term(zx, 2, m);
  const auto expected = oracle::kron_all({oracle::pauli('x'), oracle::pauli('1'), oracle::pauli('z')});
  CHECK(dist(wrapped.matrix, expected) == 0.0);

  LocalTerm id{2.5, {{0, SiteMatrix::named(SiteMatrixId::identity)}}};
  CHECK(dist(embed_term(id, 0, m).matrix, 2.5 * CMatrix::Identity(8, 8)) == 0.0);
}

TEST_CASE("build_hamiltonian") {
  SUBCASE("ising on a 2-ring doubles the bond") {
    const auto h = build_hamiltonian(make_preset("ising", 2, Boundary::periodic, {}));
    CHECK(dist(h.matrix, -2.0 * oracle::kron(oracle::pauli('z'), oracle::pauli('z'))) < 1e-15);
  }
  SUBCASE("field only") {
    ModelSpec m;
    m.n_sites = 3;
    m.terms = {{1.0, {{0, SiteMatrix::named(SiteMatrixId::sigma_z)}}}};
    const auto h = build_hamiltonian(m);
    const auto ev = hermitian_eigenvalues(h.matrix);
    const double want[] = {-3, -1, -1, -1, 1, 1, 1, 3};
    for (int i = 0; i < 8; ++i) {
      CHECK(ev(i) == doctest::Approx(want[i]));
    }
  }
  SUBCASE("empty model is zero") {
    ModelSpec m;
    m.n_sites = 4;
    CHECK(build_hamiltonian(m).matrix.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("open chain skips the wrapping bond") {
    const auto h = build_hamiltonian(make_preset("ising", 3, Boundary::open, {}));
    const auto z = oracle::pauli('z');
    const auto one = oracle::pauli('1');
    const oracle::Mat want = -(oracle::kron_all({z, z, one}) + oracle::kron_all({one, z, z}));
    CHECK(dist(h.matrix, want) < 1e-15);
  }
  SUBCASE("heisenberg pair") {
    const auto h = build_hamiltonian(make_preset("heisenberg", 2, Boundary::open, {}));
    oracle::Mat want = oracle::Mat::Zero(4, 4);
    for (char a : {'x', 'y', 'z'}) {
      want += oracle::kron(oracle::pauli(a), oracle::pauli(a));
    }
    CHECK(dist(h.matrix, want) < 1e-15);
  }
  SUBCASE("mean-field pair sum") {
    ModelSpec m;
    m.n_sites = 3;
    m.mean_field_terms = {{SiteMatrix::named(SiteMatrixId::sigma_z), 1.5}};
    const auto h = build_hamiltonian(m);
    const auto z = oracle::pauli('z');
    const auto one = oracle::pauli('1');
    const oracle::Mat want = (1.5 / 3.0) * 2.0 *
                      (oracle::kron_all({z, z, one}) + oracle::kron_all({z, one, z}) + oracle::kron_all({one, z, z}));
    CHECK(dist(h.matrix, want) < 1e-14);
  }
}

TEST_CASE("translate_operator") {
  ModelSpec m;
  m.n_sites = 3;
  LocalTerm z0{1.0, {{0, SiteMatrix::named(SiteMatrixId::sigma_z)}}};
  const auto op = embed_term(z0, 0, m);
  CHECK(dist(translate_operator(op, 0).matrix, op.matrix) == 0.0);
  CHECK(dist(translate_operator(op, 3).matrix, op.matrix) == 0.0);
  CHECK(dist(translate_operator(op, 1).matrix, embed_term(z0, 1, m).matrix) == 0.0);
  CHECK(dist(translate_operator(op, -1).matrix, embed_term(z0, 2, m).matrix) == 0.0);

  const auto h = build_hamiltonian(make_preset("transverse_ising", 5, Boundary::periodic, {{"g", 0.7}}));
  CHECK(dist(translate_operator(h, 2).matrix, h.matrix) < 1e-14);
}

TEST_CASE("presets reject bad input") {
  CHECK_THROWS_AS(make_preset("potts", 4, Boundary::periodic, {}), PreconditionError);
  CHECK_THROWS_AS(make_preset("ising", 4, Boundary::periodic, {{"g", 1.0}}), PreconditionError);
  CHECK_THROWS_AS(make_preset("ising", 20, Boundary::periodic, {}).hilbert_dim(), PreconditionError);
  CHECK(preset_names().size() == 5);
}
