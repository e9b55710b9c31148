#include "egats/tools.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace egats {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string to_string(DocKind k) {
    switch (k) {
        case DocKind::ToolDoc: return "ToolDoc";
        case DocKind::ExploitEntry: return "ExploitEntry";
        case DocKind::Playbook: return "Playbook";
    }
    return "ToolDoc";
}

DocKind doc_kind_from_string(std::string_view s) {
    if (s == "ToolDoc") return DocKind::ToolDoc;
    if (s == "ExploitEntry") return DocKind::ExploitEntry;
    if (s == "Playbook") return DocKind::Playbook;
    throw ConfigError("unknown document kind '" + std::string(s) + "'");
}

void KnowledgeBase::add(KnowledgeDoc doc) {
    std::vector<Violation> v;
    if (doc.id.empty()) v.push_back({"id", "document id is required"});
    if (doc.index_terms.empty()) v.push_back({"terms", "document needs at least one index term"});
    if (!v.empty()) throw ValidationError(std::move(v));
    if (docs_.count(doc.id)) throw ConflictError("document '" + doc.id + "' already loaded");
    for (auto& t : doc.index_terms) t = lower(t);
    auto id = doc.id;
    docs_.emplace(std::move(id), std::move(doc));
}

std::vector<RankedDoc> KnowledgeBase::retrieve(const std::vector<std::string>& terms) const {
    std::set<std::string> query;
    for (const auto& t : terms) {
        if (!t.empty()) query.insert(lower(t));
    }
    std::vector<RankedDoc> out;
    // docs_ iterates in id order, so a stable sort keeps ties by id.
    for (const auto& [_, d] : docs_) {
        std::set<std::string> own(d.index_terms.begin(), d.index_terms.end());
        int score = 0;
        for (const auto& q : query) score += own.count(q) ? 1 : 0;
        if (score > 0) out.push_back({&d, score});
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedDoc& a, const RankedDoc& b) { return a.score > b.score; });
    return out;
}

}  // namespace egats
