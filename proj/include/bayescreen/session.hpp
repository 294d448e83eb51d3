#pragma once
// Sequential-testing sessions: a test profile, a starting prior and the
// ordered results observed so far. The trajectory is always recomputable
// from (initial prior, results); trajectory[k + 1] is the posterior after
// results[k].

#include "bayescreen/core.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bayescreen {

using Clock = std::chrono::system_clock;

struct SessionState {
    std::string id;
    TestProfile test;
    Prior initial_prior;
    std::vector<TestResult> results;
    std::vector<double> trajectory;
    std::optional<double> target_rho;
    Clock::time_point created_at;
    Clock::time_point last_active;

    double current() const { return trajectory.back(); }
};

class SessionNotFound : public std::out_of_range {
public:
    explicit SessionNotFound(const std::string& id) : std::out_of_range("unknown session " + id) {}
};

inline std::vector<double> replay_trajectory(const TestProfile& test, const Prior& initial,
                                             const std::vector<TestResult>& results) {
    std::vector<double> out{initial.phi()};
    out.reserve(results.size() + 1);
    Prior current = initial;
    for (auto r : results) {
        current = posterior_update(current, test, r);
        out.push_back(current.phi());
    }
    return out;
}

// Accepts "+", "-", the Unicode minus sign, and the words positive/negative.
inline std::optional<TestResult> parse_result(std::string_view text) {
    if (text == "+" || text == "positive" || text == "pos") return TestResult::Positive;
    if (text == "-" || text == "\xE2\x88\x92" || text == "negative" || text == "neg") return TestResult::Negative;
    return std::nullopt;
}

constexpr const char* result_symbol(TestResult r) noexcept {
    return r == TestResult::Positive ? "+" : "-";
}

// 128 random bits as 32 lowercase hex characters.
inline std::string new_session_id() {
    static thread_local std::mt19937_64 engine = [] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }();
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    id.reserve(32);
    for (int word = 0; word < 2; ++word) {
        std::uint64_t bits = engine();
        for (int i = 0; i < 16; ++i, bits >>= 4) id += kHex[bits & 0xF];
    }
    return id;
}

struct SessionStoreOptions {
    std::chrono::seconds ttl{24 * 3600};
    std::string journal_path;  // empty = no journal
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

// Thread-safe session store. Mutations of one session are serialized on that
// session's mutex; distinct sessions proceed in parallel. With a journal
// path, every mutation is appended as one JSON line and replayed on
// construction.
class SessionStore {
public:
    explicit SessionStore(SessionStoreOptions options = {}) : options_(std::move(options)) {
        if (!options_.journal_path.empty()) {
            replay_journal();
            journal_.open(options_.journal_path, std::ios::app);
        }
    }

    SessionState create(const TestProfile& test, const Prior& prior, std::optional<double> target_rho) {
        if (target_rho) detail::checked_probability(*target_rho, "target");
        auto entry = std::make_shared<Entry>();
        const auto now = options_.now();
        entry->state = SessionState{new_session_id(), test, prior, {}, {prior.phi()}, target_rho, now, now};
        std::lock_guard guard(entry->mutex);
        {
            std::unique_lock lock(map_mutex_);
            sessions_[entry->state.id] = entry;
        }
        journal({{"op", "create"},
                 {"id", entry->state.id},
                 {"sensitivity", test.sensitivity()},
                 {"specificity", test.specificity()},
                 {"prior", prior.phi()},
                 {"target", target_rho ? nlohmann::json(*target_rho) : nlohmann::json(nullptr)},
                 {"created_at", to_millis(now)}});
        return entry->state;
    }

    // Throws DomainError(DegenerateTest) for a result of probability zero;
    // the session is left unchanged in that case.
    SessionState append(const std::string& id, TestResult result) {
        auto entry = find(id);
        std::lock_guard guard(entry->mutex);
        auto& s = entry->state;
        const Prior next = posterior_update(Prior(s.current()), s.test, result);
        s.results.push_back(result);
        s.trajectory.push_back(next.phi());
        s.last_active = options_.now();
        journal({{"op", "result"}, {"id", id}, {"result", result_symbol(result)}});
        return s;
    }

    // Removing the last result of a session with none is a no-op.
    SessionState undo(const std::string& id) {
        auto entry = find(id);
        std::lock_guard guard(entry->mutex);
        auto& s = entry->state;
        if (!s.results.empty()) {
            s.results.pop_back();
            s.trajectory.pop_back();
            journal({{"op", "undo"}, {"id", id}});
        }
        s.last_active = options_.now();
        return s;
    }

    SessionState get(const std::string& id) {
        auto entry = find(id);
        std::lock_guard guard(entry->mutex);
        entry->state.last_active = options_.now();
        return entry->state;
    }

    std::size_t evict_expired() {
        const auto cutoff = options_.now() - options_.ttl;
        std::vector<std::string> evicted;
        {
            std::unique_lock lock(map_mutex_);
            for (auto it = sessions_.begin(); it != sessions_.end();) {
                std::lock_guard guard(it->second->mutex);
                if (it->second->state.last_active < cutoff) {
                    evicted.push_back(it->first);
                    it = sessions_.erase(it);
                } else {
                    ++it;
                }
            }
        }
        for (const auto& id : evicted) journal({{"op", "evict"}, {"id", id}});
        return evicted.size();
    }

    std::size_t size() const {
        std::shared_lock lock(map_mutex_);
        return sessions_.size();
    }

private:
    struct Entry {
        std::mutex mutex;
        SessionState state{"", TestProfile(0.5, 0.5), Prior(0.0), {}, {}, {}, {}, {}};
    };

    static std::int64_t to_millis(Clock::time_point t) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
    }

    std::shared_ptr<Entry> find(const std::string& id) {
        std::shared_lock lock(map_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw SessionNotFound(id);
        return it->second;
    }

    void journal(const nlohmann::json& line) {
        if (!journal_.is_open()) return;
        std::lock_guard guard(journal_mutex_);
        journal_ << line.dump() << '\n';
        journal_.flush();
    }

    // Replays create/result/undo/evict lines. A torn final line from a crash
    // is skipped.
    void replay_journal() {
        std::ifstream in(options_.journal_path);
        std::string line;
        while (std::getline(in, line)) {
            auto record = nlohmann::json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.contains("op") || !record.contains("id")) continue;
            const auto op = record["op"].get<std::string>();
            const auto id = record["id"].get<std::string>();
            try {
                if (op == "create") {
                    auto entry = std::make_shared<Entry>();
                    const TestProfile test(record["sensitivity"].get<double>(), record["specificity"].get<double>());
                    const Prior prior(record["prior"].get<double>());
                    std::optional<double> target;
                    if (record["target"].is_number()) target = record["target"].get<double>();
                    const Clock::time_point created{std::chrono::milliseconds(record["created_at"].get<std::int64_t>())};
                    entry->state = SessionState{id, test, prior, {}, {prior.phi()}, target, created, options_.now()};
                    sessions_[id] = entry;
                } else if (auto it = sessions_.find(id); it != sessions_.end()) {
                    auto& s = it->second->state;
                    if (op == "result") {
                        const auto r = parse_result(record["result"].get<std::string>());
                        if (!r) continue;
                        s.trajectory.push_back(posterior_update(Prior(s.current()), s.test, *r).phi());
                        s.results.push_back(*r);
                    } else if (op == "undo" && !s.results.empty()) {
                        s.results.pop_back();
                        s.trajectory.pop_back();
                    } else if (op == "evict") {
                        sessions_.erase(it);
                    }
                }
            } catch (const std::exception&) {
                continue;
            }
        }
    }

    SessionStoreOptions options_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mutex journal_mutex_;
    std::ofstream journal_;
};

} // namespace bayescreen
