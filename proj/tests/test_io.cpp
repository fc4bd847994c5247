#include <sstream>

#include <gtest/gtest.h>

#include "annulus/bvp.hpp"
#include "annulus/io.hpp"
#include "annulus/problem.hpp"
#include "annulus/variational.hpp"

using namespace annulus;

TEST(ProfileCsv, RoundTrip) {
  const Problem pb = make_problem(2, 1, 2, 1, 3, 0.5);
  const Profile prof = find_lambda(pb).profile;
  std::stringstream ss;
  write_profile_csv(ss, prof, pb);

  const ProfileTable tab = read_profile_csv(ss);
  ASSERT_EQ(tab.s.size(), prof.s.size());
  ASSERT_TRUE(tab.K.has_value());
  for (std::size_t i = 0; i < prof.s.size(); ++i) {
    EXPECT_EQ(tab.s[i], prof.s[i]);  // shortest-round-trip formatting is exact
    EXPECT_EQ(tab.H[i], prof.H[i]);
    EXPECT_EQ((*tab.K)[i], prof.K[i]);
  }
}

TEST(ProfileCsv, ByteIdenticalEmission) {
  const Problem pb = make_problem(3, 1, 2, 1, 3, 0.7);
  const Profile prof = find_lambda(pb).profile;
  std::stringstream a, b;
  write_profile_csv(a, prof, pb);
  write_profile_csv(b, prof, pb);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ProfileCsv, RejectsGarbage) {
  {
    std::stringstream ss("x,y\n1,2\n");
    EXPECT_THROW(read_profile_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss("s,H\n1,2\n3,banana\n");
    EXPECT_THROW(read_profile_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss("s,H\n1,2\n");
    EXPECT_THROW(read_profile_csv(ss), std::runtime_error);  // too short
  }
}

TEST(Report, JsonRoundTrip) {
  const Problem pb = make_problem(2, 1, 2, 1, 3, 0.5);
  const ShootingResult sol = find_lambda(pb);
  const EnergyReport rep = total_energy(sol.profile, pb);

  const nlohmann::json j = report_to_json(rep, pb);
  for (const char* key : {"lambda_star", "energy_total", "energy_term", "distortion_term",
                          "el_residual", "case", "n", "r", "R", "r_star", "R_star", "alpha"})
    EXPECT_TRUE(j.contains(key)) << key;

  const ParsedReport back = report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.report.total, rep.total);
  EXPECT_EQ(back.report.energy_term, rep.energy_term);
  EXPECT_EQ(back.report.distortion_term, rep.distortion_term);
  EXPECT_EQ(back.report.el_residual, rep.el_residual);
  EXPECT_EQ(back.report.case_tag.tag, rep.case_tag.tag);
  ASSERT_TRUE(back.report.lambda_star.has_value());
  EXPECT_EQ(*back.report.lambda_star, *rep.lambda_star);
  EXPECT_EQ(back.n, pb.n);
  EXPECT_EQ(back.alpha, pb.alpha);
}

TEST(Report, NullLambdaStar) {
  const Problem pb = make_problem(2, 1, 2, 1, 3, 0.5);
  EnergyReport rep = total_energy(find_lambda(pb).profile, pb);
  rep.lambda_star.reset();
  const ParsedReport back = report_from_json(report_to_json(rep, pb));
  EXPECT_FALSE(back.report.lambda_star.has_value());
}

TEST(Report, AllFieldsFinite) {
  const Problem pb = make_problem(4, 0.5, 2.5, 1, 7, 0.3);
  const EnergyReport rep = total_energy(find_lambda(pb).profile, pb);
  for (double v : {rep.total, rep.energy_term, rep.distortion_term, rep.el_residual})
    EXPECT_TRUE(std::isfinite(v));
}
