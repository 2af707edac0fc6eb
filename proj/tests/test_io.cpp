#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/image.hpp"
#include "loopkit/io.hpp"

using namespace loopkit;
namespace fs = std::filesystem;

namespace {

/// Per-process scratch area, removed on exit.
struct ScratchRoot {
  fs::path path = fs::temp_directory_path() / ("loopkit_io" + std::to_string(::getpid()));
  ~ScratchRoot() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const ScratchRoot& scratch_root() {
  static const ScratchRoot root;
  return root;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = scratch_root().path / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Catalog, JsonRoundTrip) {
  const ObjectCatalog cat = default_catalog();
  const ObjectCatalog back = catalog_from_json(catalog_to_json(cat));
  ASSERT_EQ(back.size(), cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(back.at(int(i)).name, cat.at(int(i)).name);
    EXPECT_EQ(back.at(int(i)).nominal_ratio, cat.at(int(i)).nominal_ratio);
    EXPECT_EQ(back.at(int(i)).symmetric, cat.at(int(i)).symmetric);
    EXPECT_EQ(back.at(int(i)).group, cat.at(int(i)).group);
  }
  EXPECT_THROW(catalog_from_json(Json::object()), FormatError);
  EXPECT_THROW(catalog_from_json(Json::parse(R"([{"id": 0, "name": "a"}])")), FormatError);
}

TEST(Labels, LineRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 600), len(5, 90), ang(0, 6.28);
  LabelFrame f{42, {}};
  for (int i = 0; i < 20; ++i)
    f.labels.push_back(
        OrientedLabel::from_obb(Obb::from_center({u(rng), u(rng)}, len(rng), len(rng), ang(rng)),
                                i % 12, 0.25));
  const LabelFrame back = labels_from_line(labels_line(f, true));
  EXPECT_EQ(back.frame, 42u);
  ASSERT_EQ(back.labels.size(), f.labels.size());
  for (std::size_t i = 0; i < f.labels.size(); ++i) {
    EXPECT_EQ(back.labels[i].class_id, f.labels[i].class_id);
    EXPECT_EQ(back.labels[i].confidence, 0.25);
    for (int v = 0; v < 4; ++v) EXPECT_EQ(back.labels[i].obb[v], f.labels[i].obb[v]);
    EXPECT_NEAR(angle_distance(back.labels[i].theta, f.labels[i].theta), 0.0, 1e-12);
  }
  EXPECT_EQ(labels_line(back, true), labels_line(f, true));
}

TEST(Labels, RejectsMalformed) {
  EXPECT_THROW(labels_from_line("{"), FormatError);
  EXPECT_THROW(labels_from_line(R"({"frame": 0})"), FormatError);
  EXPECT_THROW(labels_from_line(R"({"frame": 0, "labels": [{"class_id": 0,
      "vertices": [[0,0],[1,0],[1,1]]}]})"),
               FormatError);
  // Counter-clockwise in image coordinates.
  EXPECT_THROW(labels_from_line(R"({"frame": 0, "labels": [{"class_id": 0,
      "vertices": [[0,0],[0,1],[1,1],[1,0]]}]})"),
               InvalidArgument);
  EXPECT_THROW(labels_from_line(R"({"frame": 0, "labels": [{"class_id": 0,
      "vertices": [[0,0],[2,0],[1,1],[0,1]]}]})"),
               InvalidArgument);
}

TEST(Labels, FileRoundTripSkipsBlankLines) {
  const fs::path dir = scratch("labels");
  write_text(dir / "l.jsonl",
             R"({"frame": 0, "labels": []})"
             "\r\n\n   \n"
             R"({"frame": 1, "labels": [{"class_id": 3, "vertices": [[0,0],[4,0],[4,2],[0,2]], "theta_deg": 0}]})"
             "\n");
  const auto frames = read_labels_jsonl(dir / "l.jsonl");
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_TRUE(frames[0].labels.empty());
  ASSERT_EQ(frames[1].labels.size(), 1u);
  EXPECT_EQ(frames[1].labels[0].class_id, 3);
  EXPECT_DOUBLE_EQ(frames[1].labels[0].obb.width(), 4.0);

  write_labels_jsonl(dir / "copy.jsonl", frames);
  EXPECT_EQ(read_lines(dir / "copy.jsonl").size(), 2u);
  EXPECT_THROW(read_labels_jsonl(dir / "missing.jsonl"), IoError);
}

TEST(Preds, RoundTripAndValidation) {
  const PredFrame f{3, {{{10.5, 20.25, 8, 4}, 77, 0.5}, {{1, 2, 3, 4}, 0, 1.0}}};
  const PredFrame back = preds_from_line(preds_line(f));
  EXPECT_EQ(back.frame, 3u);
  ASSERT_EQ(back.preds.size(), 2u);
  EXPECT_EQ(back.preds[0].expanded_class, 77);
  EXPECT_EQ(back.preds[0].aabb.x, 10.5);
  EXPECT_EQ(back.preds[0].confidence, 0.5);

  EXPECT_THROW(preds_from_line(R"({"frame":0,"preds":[{"cx":0,"cy":0,"w":0,"h":1,"expanded_class":1}]})"),
               FormatError);
  EXPECT_THROW(preds_from_line(R"({"frame":0,"preds":[{"cx":0,"cy":0,"w":1,"h":1,"expanded_class":-1}]})"),
               FormatError);
  EXPECT_THROW(preds_from_line(
                   R"({"frame":0,"preds":[{"cx":0,"cy":0,"w":1,"h":1,"expanded_class":1,"confidence":1.5}]})"),
               FormatError);
}

TEST(Manifest, RoundTrip) {
  Manifest m{{"a.png", "b/c.png"}, 30.0, 450.0};
  const Manifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back.frames, m.frames);
  EXPECT_EQ(back.fps, 30.0);
  ASSERT_TRUE(back.camera_height_mm);
  EXPECT_EQ(*back.camera_height_mm, 450.0);
  EXPECT_FALSE(manifest_from_json(Json::parse(R"({"frames": []})")).camera_height_mm);
  EXPECT_THROW(manifest_from_json(Json::parse(R"({"frames": 3})")), FormatError);
}

TEST(Matches, ReadsConsecutivePairs) {
  const fs::path dir = scratch("matches");
  write_text(dir / "m.jsonl", matches_line(0, {{{1, 2}, {3, 4}}}) + "\n" +
                                  matches_line(1, {{{5, 6}, {7, 8}}, {{0, 0}, {1, 1}}}) + "\n");
  const auto pairs = read_matches_jsonl(dir / "m.jsonl");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0][0].dst, (Vec2{3, 4}));
  EXPECT_EQ(pairs[1].size(), 2u);

  write_text(dir / "bad.jsonl", R"({"from": 0, "to": 2, "matches": []})");
  EXPECT_THROW(read_matches_jsonl(dir / "bad.jsonl"), FormatError);
  write_text(dir / "short.jsonl", R"({"from": 0, "to": 1, "matches": [[1,2,3]]})");
  EXPECT_THROW(read_matches_jsonl(dir / "short.jsonl"), FormatError);
}

TEST(Report, CsvLayout) {
  const ObjectCatalog cat = default_catalog();
  const auto q = AngleQuantizer::from_degrees(10);
  SynthOptions o;
  o.frames = 5;
  const auto frames = fixtures::oracle_frames(fixtures::label_frames(o), q, cat, {}, 1);
  const EvalReport r = evaluate(frames, q, cat);
  const std::string csv = report_to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "Index,Precision,Recall,FScore,IOU,OIOU,AP");
  std::vector<std::string> names;
  while (std::getline(in, line)) names.push_back(line.substr(0, line.find(',')));
  ASSERT_FALSE(names.empty());
  EXPECT_EQ(names.back(), "global");
  for (const auto& g : r.groups)
    EXPECT_NE(std::find(names.begin(), names.end(), g.name), names.end()) << g.name;
  EXPECT_NE(csv.find("\nglobal,1.0000,1.0000,1.0000,"), std::string::npos);

  const Json j = report_to_json(r);
  EXPECT_EQ(j.at("map").get<double>(), 1.0);
  EXPECT_EQ(j.at("classes").size(), 12u);
  EXPECT_EQ(j.at("classes")[0].at("pr_curve").at("thresholds").size(),
            r.classes[0].curve.thresholds.size());
}

TEST(Png, RoundTrip) {
  const fs::path dir = scratch("png");
  for (int channels : {1, 3, 4}) {
    Image img(37, 21, channels);
    std::mt19937 rng(channels);
    for (auto& b : img.data) b = std::uint8_t(rng());
    const fs::path p = dir / ("img" + std::to_string(channels) + ".png");
    write_png(p, img);
    EXPECT_EQ(read_png(p), img);
    EXPECT_EQ(read_text(p).size(), encode_png(img).size());
  }
  write_text(dir / "junk.png", "not a png");
  EXPECT_THROW(read_png(dir / "junk.png"), Error);
  EXPECT_THROW(read_png(dir / "nope.png"), IoError);
}
