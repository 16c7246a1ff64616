// Apache License, Version 2.0, refer to LICENSE.txt

#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "mixmc/error.hpp"
#include "mixmc/io.hpp"

using namespace mixmc;

TEST_CASE("model and posteriors survive a write/read cycle bit for bit") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = gen::model(1 + trial % 4, 2 + trial % 6, rng);
    std::stringstream buf;
    io::write_model(buf, m);
    const auto back = io::read_model(buf);
    CHECK(back.categories() == m.categories());
    CHECK(back.mixing() == m.mixing());
    for (std::size_t i = 0; i < m.num_clusters(); ++i) CHECK(back.cluster(i) == m.cluster(i));

    const auto data = gen::dataset(m.num_categories(), 15, 1, 6, rng);
    std::stringstream pbuf;
    const auto g = e_step(m, data);
    io::write_posteriors(pbuf, g);
    CHECK(io::read_posteriors(pbuf).matrix() == g.matrix());

    std::stringstream sbuf;
    io::write_sequences(sbuf, data);
    const auto seqs = io::read_sequences(sbuf);
    REQUIRE(seqs.size() == data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
      CHECK(seqs[s].states == data[s].states);
      CHECK(seqs[s].user == data[s].user);
      CHECK(seqs[s].week == data[s].week);
    }
  }
}

TEST_CASE("model document layout") {
  const MixtureModel m(CategorySet({"a", "b"}), {1.0}, {ChainParams::uniform(2)});
  const auto doc = io::model_to_json(m);
  CHECK(doc["K"] == 1);
  CHECK(doc["categories"] == io::json::array({"a", "b"}));
  CHECK(doc["clusters"][0]["T"][1][0] == 0.5);
  CHECK(io::format_double(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("sequence file layout") {
  const SequenceDataset data(CategorySet({"a", "b"}), {Sequence{"u1", "London", {2010, 18}, {0, 1, 1}}});
  std::ostringstream out;
  io::write_sequences(out, data);
  CHECK(out.str() ==
        "{\"categories\":[\"a\",\"b\"]}\n"
        "{\"city\":\"London\",\"states\":[0,1,1],\"user\":\"u1\",\"week\":\"2010-W18\"}\n");
}

TEST_CASE("malformed files") {
  auto read_seq = [](const std::string& text) {
    std::istringstream in(text);
    return io::read_sequences(in);
  };
  CHECK_THROWS_AS(read_seq(""), ParseError);
  CHECK_THROWS_AS(read_seq("{\"categories\":[\"a\",\"b\"]}\n{\"user\":\"u\"}\n"), ParseError);
  try {
    read_seq("{\"categories\":[\"a\",\"b\"]}\n"
             "{\"user\":\"u\",\"city\":\"c\",\"week\":\"2010-W01\",\"states\":[0]}\n"
             "{\"user\":\"u\",\"city\":\"c\",\"week\":\"2010-W01\",\"states\":[2]}\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  std::istringstream bad_model("{\"categories\":[\"a\",\"b\"],\"K\":1,\"p\":[1.0],"
                               "\"clusters\":[{\"f\":[0.5,0.6],\"T\":[[0.5,0.5],[0.5,0.5]]}]}");
  CHECK_THROWS_AS(io::read_model(bad_model), InvalidInput);
  std::istringstream truncated("{\"categories\":");
  CHECK_THROWS_AS(io::read_model(truncated), ParseError);

  std::istringstream ragged("g0,g1\n0.5,0.5\n1\n");
  CHECK_THROWS_AS(io::read_posteriors(ragged), ParseError);
  std::istringstream unnormalized("g0,g1\n0.5,0.6\n");
  CHECK_THROWS_AS(io::read_posteriors(unnormalized), InvalidInput);
}

TEST_CASE("trace rows carry the step delta") {
  std::mt19937_64 rng(1);
  const auto data = gen::dataset(3, 20, 2, 5, rng);
  EmConfig cfg;
  cfg.num_clusters = 2;
  cfg.max_iters = 3;
  cfg.epsilon = 1e-12;
  const auto r = fit(data, cfg);
  std::ostringstream out;
  io::write_trace(out, r);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  std::getline(lines, line);
  CHECK(line == "iter,loglik,delta");
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
}
