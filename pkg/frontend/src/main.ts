import { Api } from "./api.js";
import { initialState, Store } from "./state.js";
import { Workbench } from "./ui.js";

// ?api=http://host:port overrides; a file:// page defaults to the usual
// local service port, a served page talks to its own origin
function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  if (param) return param.replace(/\/$/, "");
  if (window.location.protocol === "file:") return "http://localhost:8000";
  return "";
}

const store = new Store(initialState());
const workbench = new Workbench(new Api(apiBase()), store);
void workbench.boot();
