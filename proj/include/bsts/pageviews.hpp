#pragma once

// Wikimedia REST pageviews client with an on-disk cache.
//
// Public aggregates only: the API exposes per-project daily totals, not the
// referrer- or geography-split series some studies need; load those from CSV
// instead. Requests are serialized per process, rate limited, retried with
// exponential backoff, and cached one file per canonical URL.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
// glibc's resolv.h, pulled in by httplib, leaks a `_res` macro that mangles
// identifiers in headers included afterwards (Eigen uses `_res` as a name).
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include "bsts/calendar.hpp"
#include "bsts/errors.hpp"
#include "bsts/series.hpp"

namespace bsts {

/// One daily-aggregate request. Granularity is fixed to daily.
struct PageviewQuery {
    std::string project = "en.wikipedia.org";
    std::string access = "all-access";  // all-access | desktop | mobile-web | mobile-app
    std::string agent = "user";         // all-agents | user | spider | automated
    Date start;
    Date end;
};

struct FetchStats {
    int cache_hits = 0;
    int network_requests = 0;
};

struct FetchOptions {
    std::string base_url = "https://wikimedia.org/api/rest_v1";
    // empty: fall back to $IMPACT_BSTS_CACHE; still empty disables caching
    std::filesystem::path cache_dir;
    int attempts = 3;
    std::chrono::milliseconds min_delay{200};
    std::chrono::milliseconds initial_backoff{250};
    std::string user_agent = "impact-bsts/0.1 (time-series research tool)";
    FetchStats* stats = nullptr;  // filled per chunk when set
};

namespace detail {

inline std::string compact_stamp(Date d) {
    // endpoint date format YYYYMMDD00
    std::string iso = d.to_string();
    return iso.substr(0, 4) + iso.substr(5, 2) + iso.substr(8, 2) + "00";
}

inline std::string aggregate_path(const PageviewQuery& q, Date from, Date to) {
    return "/metrics/pageviews/aggregate/" + q.project + "/" + q.access + "/" + q.agent +
           "/daily/" + compact_stamp(from) + "/" + compact_stamp(to);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::filesystem::path cache_file(const std::filesystem::path& dir,
                                        const std::string& key) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(key)));
    return dir / (std::string(buf) + ".json");
}

inline bool cache_read(const std::filesystem::path& file, const std::string& key,
                       std::string& payload) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json entry;
    try {
        entry = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::exception&) {
        return false;  // corrupt entry: refetch
    }
    if (!entry.contains("key") || entry["key"] != key || !entry.contains("payload")) {
        return false;
    }
    payload = entry["payload"].get<std::string>();
    return true;
}

inline void cache_write(const std::filesystem::path& file, const std::string& key,
                        const std::string& payload) {
    nlohmann::json entry;
    entry["key"] = key;
    entry["fetched_at"] = static_cast<long long>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    entry["payload"] = payload;
    std::filesystem::create_directories(file.parent_path());
    // temp file + rename keeps concurrent readers from seeing partial writes
    std::filesystem::path temp = file;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cache: cannot write " + temp.string());
        out << entry.dump();
    }
    std::filesystem::rename(temp, file);
}

/// Splits base_url into (host part for the client, path prefix).
inline std::pair<std::string, std::string> split_base_url(const std::string& base) {
    const std::size_t scheme = base.find("://");
    const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const std::size_t slash = base.find('/', host_start);
    if (slash == std::string::npos) return {base, ""};
    return {base.substr(0, slash), base.substr(slash)};
}

inline std::string http_get(const std::string& base_url, const std::string& path,
                            const FetchOptions& opt) {
    // one request in flight per process; spacing enforced between requests
    static std::mutex gate;
    static std::chrono::steady_clock::time_point last_request{};
    std::lock_guard<std::mutex> lock(gate);

    auto [host, prefix] = split_base_url(base_url);
    int last_status = 0;
    std::string last_detail = "connection failed";
    std::chrono::milliseconds backoff = opt.initial_backoff;
    for (int attempt = 0; attempt < opt.attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        const auto now = std::chrono::steady_clock::now();
        const auto since = std::chrono::duration_cast<std::chrono::milliseconds>(
            now - last_request);
        if (last_request.time_since_epoch().count() != 0 && since < opt.min_delay) {
            std::this_thread::sleep_for(opt.min_delay - since);
        }
        httplib::Client client(host);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        client.set_follow_location(true);
        httplib::Headers headers = {{"User-Agent", opt.user_agent},
                                    {"Accept", "application/json"}};
        httplib::Result res = client.Get(prefix + path, headers);
        last_request = std::chrono::steady_clock::now();
        if (res && res->status == 200) return res->body;
        if (res) {
            last_status = res->status;
            last_detail = "HTTP " + std::to_string(res->status);
        } else {
            last_status = 0;
            last_detail = httplib::to_string(res.error());
        }
    }
    throw HttpError(last_status, "GET " + base_url + path + " failed after " +
                                     std::to_string(opt.attempts) + " attempts: " +
                                     last_detail);
}

/// Fills `values` (indexed from series_start) from one response payload.
inline void apply_payload(const std::string& payload, Date series_start,
                          std::vector<double>& values, const std::string& url) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("pageviews: bad JSON from " + url + ": " + e.what());
    }
    if (!doc.contains("items") || !doc["items"].is_array()) {
        throw ParseError("pageviews: response from " + url + " lacks an items array");
    }
    for (const auto& item : doc["items"]) {
        if (!item.contains("timestamp") || !item.contains("views")) {
            throw ParseError("pageviews: item without timestamp/views from " + url);
        }
        const std::string stamp = item["timestamp"].get<std::string>();
        if (stamp.size() < 8) {
            throw ParseError("pageviews: bad timestamp '" + stamp + "' from " + url);
        }
        Date d;
        try {
            d = Date::parse(stamp.substr(0, 4) + "-" + stamp.substr(4, 2) + "-" +
                            stamp.substr(6, 2));
        } catch (const ParseError&) {
            throw ParseError("pageviews: bad timestamp '" + stamp + "' from " + url);
        }
        const long idx = d - series_start;
        if (idx < 0 || idx >= static_cast<long>(values.size())) continue;
        values[static_cast<std::size_t>(idx)] = item["views"].get<double>();
    }
}

}  // namespace detail

/// Fetches a daily pageview series, reading and filling the cache per
/// <= 1-year chunk. Days absent from the response stay missing.
inline DateIndexedSeries fetch_aggregate(const PageviewQuery& query,
                                         const FetchOptions& options = {}) {
    if (query.start > query.end) {
        throw Error("pageviews: start " + query.start.to_string() + " is after end " +
                    query.end.to_string());
    }
    std::filesystem::path cache_dir = options.cache_dir;
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("IMPACT_BSTS_CACHE")) cache_dir = env;
    }

    const std::size_t n = static_cast<std::size_t>(query.end - query.start) + 1;
    std::vector<double> values(n, kMissing);

    Date chunk_start = query.start;
    while (chunk_start <= query.end) {
        Date chunk_end = chunk_start + 364;
        if (chunk_end > query.end) chunk_end = query.end;
        const std::string url =
            options.base_url + detail::aggregate_path(query, chunk_start, chunk_end);

        std::string payload;
        bool hit = false;
        std::filesystem::path entry;
        if (!cache_dir.empty()) {
            entry = detail::cache_file(cache_dir, url);
            hit = detail::cache_read(entry, url, payload);
        }
        if (!hit) {
            payload = detail::http_get(
                options.base_url, detail::aggregate_path(query, chunk_start, chunk_end),
                options);
            if (!cache_dir.empty()) detail::cache_write(entry, url, payload);
            if (options.stats) ++options.stats->network_requests;
        } else if (options.stats) {
            ++options.stats->cache_hits;
        }
        detail::apply_payload(payload, query.start, values, url);
        chunk_start = chunk_end + 1;
    }
    return DateIndexedSeries(query.project, query.start, std::move(values));
}

}  // namespace bsts
