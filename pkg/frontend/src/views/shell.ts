import { esc } from "../format.js";

/** Page chrome shared by every route. */
export function renderShell(title: string, body: string, offline = false): string {
  const banner = offline
    ? `<div class="banner banner-error">Lost connection to the API; retrying.</div>`
    : "";
  return `
    <div class="shell">
      <nav class="topnav">
        <a href="#/">stages</a>
        <span class="title">${esc(title)}</span>
      </nav>
      ${banner}
      <main>${body}</main>
    </div>`;
}
