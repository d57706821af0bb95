import { ApiClient } from "./api.js";
import { Renderer } from "./render.js";
import { Session } from "./session.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return (fromQuery ?? "http://127.0.0.1:8710").replace(/\/+$/, "");
}

const root = document.querySelector<HTMLElement>("#app");
if (!root) throw new Error("missing #app container");

const api = new ApiClient(apiBase());
const session = new Session(api);
const renderer = new Renderer(root, session, api);
renderer.render(session.state);
