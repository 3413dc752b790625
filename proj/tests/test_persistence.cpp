#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "messplus/event_log.hpp"
#include "messplus/serialization.hpp"
#include "messplus/simulator.hpp"
#include "temp_dir.hpp"

using namespace messplus;
namespace fs = std::filesystem;

TEST_CASE("record encoding") {
    CHECK(EventLog::crc32("123456789") == 0xcbf43926u);
    CHECK(EventLog::encode("{}") == "2 " + [] {
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", EventLog::crc32("{}"));
        return std::string(buf);
    }() + " {}\n");
}

TEST_CASE("append, reopen, read back") {
    TempDir dir;
    {
        EventLog log(dir.path());
        log.append(R"({"a":1})");
        log.append(R"({"a":2})");
        CHECK(log.records() == 2);
        CHECK_THROWS(log.append("two\nlines"));
    }
    EventLog log(dir.path());
    CHECK(log.records() == 2);
    CHECK(log.read_all() == std::vector<std::string>{R"({"a":1})", R"({"a":2})"});
}

TEST_CASE("segments roll over") {
    TempDir dir;
    EventLog log(dir.path(), 64);
    for (int i = 0; i < 20; ++i) {
        log.append(R"({"i":)" + std::to_string(i) + "}");
    }
    CHECK(log.segments().size() > 1);
    EventLog again(dir.path(), 64);
    const auto all = again.read_all();
    REQUIRE(all.size() == 20);
    CHECK(all[19] == R"({"i":19})");
}

TEST_CASE("torn or corrupt tail is truncated") {
    TempDir dir;
    {
        EventLog log(dir.path());
        for (int i = 0; i < 5; ++i) {
            log.append(R"({"i":)" + std::to_string(i) + "}");
        }
    }
    const auto seg = EventLog(dir.path()).segments().front();
    const auto size = fs::file_size(seg);

    SUBCASE("cut mid-record") {
        fs::resize_file(seg, size - 4);
        EventLog log(dir.path());
        CHECK(log.records() == 4);
        log.append(R"({"i":"new"})");
        EventLog reread(dir.path());
        CHECK(reread.read_all().back() == R"({"i":"new"})");
        CHECK(reread.records() == 5);
    }
    SUBCASE("flipped payload byte") {
        std::fstream f(seg, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(size - 3));
        f.put('9');
        f.close();
        EventLog log(dir.path());
        CHECK(log.records() == 4);
    }
}

TEST_CASE("predictor checkpoint round-trips bit-exactly") {
    TempDir dir;
    auto st = PredictorState::zeros(3, 4, 1e-4);
    SplitMix64 rng(1);
    for (auto& v : st.z) {
        v = rng.normal() / 3.0;
    }
    st.k = 77;
    const auto path = (dir.path() / "ckpt.json").string();
    save_predictor_checkpoint(path, st);
    CHECK(load_predictor_checkpoint(path) == st);
    CHECK_FALSE(fs::exists(path + ".tmp"));
}

TEST_CASE("scenario JSON round-trip") {
    const auto cfg = canonical_scenario(44);
    const Json j = cfg;
    const auto back = j.get<ScenarioConfig>();
    CHECK(Json(back) == j);
    CHECK(zoo_profile_hash(back.zoo) == zoo_profile_hash(cfg.zoo));
}

TEST_CASE("unknown schema version is rejected") {
    Json j = canonical_scenario();
    j["schema_version"] = 99;
    CHECK_THROWS_AS(j.get<ScenarioConfig>(), ParameterError);
}
