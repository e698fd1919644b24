#include "monoalign/server.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

// Must follow the Eigen headers pulled in above: resolv.h defines an _res macro.
#include <httplib.h>

#include "monoalign/common.hpp"

namespace monoalign {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Reply error_reply(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

std::string bearer(const httplib::Request& req) {
  const auto header = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (header.rfind(prefix, 0) == 0) return header.substr(prefix.size());
  return {};
}

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_header("Cache-Control", "no-store");
  res.set_content(reply.body.dump(), "application/json");
}

}  // namespace

nlohmann::json export_line(const Response& r, const TaskItem& t) {
  const bool constrained = chose_constrained(r, t);
  return {{"task_id", r.task_id},
          {"rater", t.rater},
          {"pair_id", t.pair_id},
          {"pair_index", t.pair_index},
          {"row_id", t.row_id},
          {"shap_l1", t.shap_l1},
          {"left_model", t.left_model},
          {"choice", r.choice},
          {"chosen_model", constrained ? kConstrained : kUnconstrained},
          {"confidence", r.confidence},
          {"timestamp", r.timestamp}};
}

// ---------------------------------------------------------------- store

RatingStore::RatingStore(ExperimentBundle bundle, fs::path log_path, Clock clock)
    : bundle_(std::move(bundle)), log_path_(std::move(log_path)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_now;
  for (const auto& [rater, token] : bundle_.tokens) {
    if (token == bundle_.admin_token) throw Error("store: rater token equals the admin token");
    if (!rater_by_token_.emplace(token, rater).second) throw Error("store: duplicate rater token");
    sessions_[rater];
  }
  for (std::size_t i = 0; i < bundle_.tasks.size(); ++i) {
    const auto& t = bundle_.tasks[i];
    if (!task_index_.emplace(t.task_id, i).second) throw Error("store: duplicate task id " + t.task_id);
    auto it = sessions_.find(t.rater);
    if (it == sessions_.end()) throw Error("store: task " + t.task_id + " names unknown rater " + t.rater);
    it->second.tasks.push_back(i);
  }

  if (!fs::exists(log_path_)) return;
  std::ifstream in(log_path_, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::size_t begin = 0;
  std::size_t line_no = 0;
  while (begin < text.size()) {
    const auto end = text.find('\n', begin);
    ++line_no;
    if (end == std::string::npos) {
      // A line without its newline is a write cut short by a crash; it was never acknowledged.
      std::ofstream fix(log_path_, std::ios::binary | std::ios::trunc);
      fix << text.substr(0, begin);
      break;
    }
    const auto line = text.substr(begin, end - begin);
    begin = end + 1;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto r = Response::from_json(j);
    const auto t = task_index_.find(r.task_id);
    if (t == task_index_.end()) throw Error("store: log line " + std::to_string(line_no) + " names unknown task");
    const auto& rater = bundle_.tasks[t->second].rater;
    if (auto bad = check(rater, r))
      throw Error("store: log line " + std::to_string(line_no) + " is inconsistent: " +
                  bad->body.at("message").get<std::string>());
    apply(rater, r);
  }
}

std::optional<std::string> RatingStore::rater_of(std::string_view token) const {
  auto it = rater_by_token_.find(std::string(token));
  if (it == rater_by_token_.end()) return std::nullopt;
  return it->second;
}

std::optional<Reply> RatingStore::check(const std::string& rater, const Response& r) const {
  const auto& s = sessions_.at(rater);
  const auto t = task_index_.find(r.task_id);
  if (t == task_index_.end() || bundle_.tasks[t->second].rater != rater)
    return error_reply(409, "out_of_order", "task " + r.task_id + " is not assigned to this rater");
  for (std::size_t k = 0; k < s.completed; ++k)
    if (s.tasks[k] == t->second) return error_reply(409, "duplicate", "task " + r.task_id + " was already answered");
  if (s.completed >= s.tasks.size() || s.tasks[s.completed] != t->second)
    return error_reply(409, "out_of_order", "task " + r.task_id + " is not the current task");
  return std::nullopt;
}

void RatingStore::apply(const std::string& rater, const Response& r) {
  sessions_.at(rater).completed += 1;
  log_.push_back(r);
}

Reply RatingStore::next_task(std::string_view token) const {
  const auto rater = rater_of(token);
  if (!rater) return error_reply(401, "unauthorized", "unknown rater token");
  std::lock_guard lock(mutex_);
  const auto& s = sessions_.at(*rater);
  const auto total = s.tasks.size();
  if (s.completed >= total) return {200, {{"state", "done"}, {"completed", total}, {"total", total}}};
  const auto& task = bundle_.tasks[s.tasks[s.completed]];
  return {200,
          {{"state", "task"}, {"task", task.blinded_json(s.completed + 1, total)}, {"completed", s.completed},
           {"total", total}}};
}

Reply RatingStore::post_response(std::string_view token, const nlohmann::json& body) {
  const auto rater = rater_of(token);
  if (!rater) return error_reply(401, "unauthorized", "unknown rater token");
  Response r;
  try {
    if (!body.is_object()) throw Error("body must be a JSON object");
    r.task_id = body.at("task_id").get<std::string>();
    r.choice = body.at("choice").get<std::string>();
    r.confidence = body.at("confidence").get<int>();
    r.validate();
  } catch (const std::exception& e) {
    return error_reply(400, "invalid", e.what());
  }

  std::lock_guard lock(mutex_);
  if (auto bad = check(*rater, r)) return *bad;
  r.timestamp = clock_();
  {
    std::ofstream out(log_path_, std::ios::binary | std::ios::app);
    out << r.to_json().dump() << "\n";
    out.flush();
    if (!out) return error_reply(500, "storage", "could not append to the response log");
  }
  apply(*rater, r);
  const auto& s = sessions_.at(*rater);
  return {200, {{"state", "recorded"}, {"task_id", r.task_id}, {"completed", s.completed}, {"total", s.tasks.size()}}};
}

std::optional<std::string> RatingStore::export_results(std::string_view token) const {
  if (bundle_.admin_token.empty() || token != bundle_.admin_token) return std::nullopt;
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& r : log_) out += export_line(r, bundle_.tasks[task_index_.at(r.task_id)]).dump() + "\n";
  return out;
}

SessionState RatingStore::session(const std::string& rater) const {
  std::lock_guard lock(mutex_);
  const auto& s = sessions_.at(rater);
  SessionState state;
  state.rater = rater;
  state.completed = s.completed;
  state.total = s.tasks.size();
  for (std::size_t k = s.completed; k < s.tasks.size(); ++k) state.remaining.push_back(bundle_.tasks[s.tasks[k]].task_id);
  return state;
}

std::vector<Response> RatingStore::responses() const {
  std::lock_guard lock(mutex_);
  return log_;
}

// ---------------------------------------------------------------- http

struct RatingServer::Impl {
  RatingStore& store;
  httplib::Server http;
};

RatingServer::RatingServer(RatingStore& store, fs::path static_dir) : impl_(new Impl{store, {}}) {
  auto& http = impl_->http;
  RatingStore* s = &store;

  http.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(rating_page_html()), "text/html; charset=utf-8");
  });
  http.Get("/task", [s](const httplib::Request& req, httplib::Response& res) { send(res, s->next_task(bearer(req))); });
  http.Post("/response", [s](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      // Unauthenticated callers learn about their token before their body.
      if (!s->rater_of(bearer(req))) return send(res, error_reply(401, "unauthorized", "unknown rater token"));
      return send(res, error_reply(400, "invalid", "body is not valid JSON"));
    }
    send(res, s->post_response(bearer(req), body));
  });
  http.Get("/export", [s](const httplib::Request& req, httplib::Response& res) {
    const auto token = bearer(req);
    if (auto text = s->export_results(token)) {
      res.set_content(*text, "application/x-ndjson");
      return;
    }
    send(res, s->rater_of(token) ? error_reply(403, "forbidden", "export needs the admin token")
                                 : error_reply(401, "unauthorized", "unknown token"));
  });
  if (!static_dir.empty()) {
    fs::create_directories(static_dir);
    http.set_mount_point("/static", static_dir.string());
  }
}

RatingServer::~RatingServer() { stop(); }

bool RatingServer::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int RatingServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool RatingServer::serve() { return impl_->http.listen_after_bind(); }

void RatingServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void RatingServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

std::string_view rating_page_html() {
  static constexpr std::string_view page = R"HTML(<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Prediction review</title>
<style>
body { font-family: sans-serif; margin: 1.5em; }
.plots { display: flex; gap: 2em; }
.plot { flex: 1; border: 1px solid #ccc; padding: .5em; }
.bar { height: 1.1em; display: inline-block; }
.pos { background: #d6604d; } .neg { background: #4393c3; }
.row { display: flex; align-items: center; margin: .2em 0; }
.label { width: 14em; font-size: .85em; }
.track { position: relative; flex: 1; height: 1.1em; }
table { border-collapse: collapse; margin-bottom: 1em; }
td { border: 1px solid #ddd; padding: 2px 6px; font-size: .85em; }
#error { color: #b00; }
</style>
</head>
<body>
<div id="progress"></div>
<div id="error"></div>
<div id="content"></div>
<script>
const token = new URLSearchParams(location.search).get("token") || "";
const headers = { "Authorization": "Bearer " + token, "Content-Type": "application/json" };
let current = null, choice = null, confidence = null, busy = false;

function plot(title, bars, scale) {
  let html = `<div class="plot"><h3>${title}</h3>`;
  for (const b of bars) {
    const w = scale > 0 ? 50 * Math.abs(b.attribution) / scale : 0;
    const left = b.attribution >= 0 ? 50 : 50 - w;
    html += `<div class="row"><span class="label">${b.feature} = ${b.value}</span>` +
      `<span class="track"><span class="bar ${b.attribution >= 0 ? "pos" : "neg"}" ` +
      `style="position:absolute;left:${left}%;width:${w}%"></span></span>` +
      `<span>${b.attribution.toFixed(3)}</span></div>`;
  }
  return html + "</div>";
}

function render(view) {
  const t = view.task;
  document.getElementById("progress").textContent = `Patient ${t.position} of ${t.total}`;
  const scale = Math.max(...t.left.concat(t.right).map(b => Math.abs(b.attribution)));
  let html = "<table>" + t.patient.map(p => `<tr><td>${p.feature}</td><td>${p.value}</td></tr>`).join("") + "</table>";
  html += `<div class="plots">${plot("LEFT", t.left, scale)}${plot("RIGHT", t.right, scale)}</div>`;
  html += `<p>Which explanation is more plausible?
    <label><input type="radio" name="choice" value="left"> LEFT</label>
    <label><input type="radio" name="choice" value="right"> RIGHT</label></p>
    <p>Confidence (1 = low, 5 = high): ` +
    [1, 2, 3, 4, 5].map(c => `<label><input type="radio" name="conf" value="${c}"> ${c}</label>`).join(" ") +
    `</p><button id="submit" disabled>Submit</button>`;
  document.getElementById("content").innerHTML = html;
  document.querySelectorAll("input[name=choice]").forEach(e => e.onchange = () => { choice = e.value; update(); });
  document.querySelectorAll("input[name=conf]").forEach(e => e.onchange = () => { confidence = +e.value; update(); });
  document.getElementById("submit").onclick = submit;
}

function update() {
  document.getElementById("submit").disabled = busy || choice === null || confidence === null;
}

async function load() {
  choice = confidence = null;
  document.getElementById("error").textContent = "";
  try {
    const r = await fetch("/task", { headers });
    const body = await r.json();
    if (!r.ok) throw new Error(body.message);
    if (body.state === "done") {
      document.getElementById("progress").textContent = "All patients reviewed. Thank you.";
      document.getElementById("content").innerHTML = "";
      return;
    }
    current = body.task;
    render(body);
  } catch (e) {
    document.getElementById("error").innerHTML = `${e.message} <button onclick="load()">Retry</button>`;
  }
}

async function submit() {
  busy = true; update();
  try {
    const r = await fetch("/response", { method: "POST", headers,
      body: JSON.stringify({ task_id: current.task_id, choice, confidence }) });
    const body = await r.json();
    if (r.status === 409) document.getElementById("error").textContent = "This patient was already answered.";
    else if (!r.ok) throw new Error(body.message);
    busy = false;
    await load();
  } catch (e) {
    busy = false; update();
    document.getElementById("error").innerHTML = `${e.message} <button onclick="submit()">Retry</button>`;
  }
}

load();
</script>
</body>
</html>
)HTML";
  return page;
}

}  // namespace monoalign
