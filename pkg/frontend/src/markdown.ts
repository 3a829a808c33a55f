/** Transcript body rendering: escaped text with fenced code blocks and
 * `![description](resource)` embeds resolved for a human viewer.
 *
 * An embed whose resource names a variable of the sending node renders from
 * the control API's blob endpoint — an image viewer for image media, a file
 * card otherwise. URL resources become links; anything else stays a plain
 * card. Text inside fenced blocks is data and is never embed-scanned.
 */

export interface EmbedContext {
  /** variable name → media type ("" when unknown) for the sending node */
  variables: Map<string, string>;
  nodeId: number;
  /** base URL of the control API, no trailing slash */
  apiBase: string;
}

const EMBED = /!\[([^\]\n]*)\]\(([^)\n]+)\)/g;
const URL_SCHEME = /^[a-z][a-z0-9+.-]*:\/\//i;
const IMAGE_EXT = /\.(png|jpe?g|gif|svg|webp|bmp)$/i;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function variableUrl(apiBase: string, nodeId: number, name: string): string {
  return `${apiBase}/variable?node=${nodeId}&name=${encodeURIComponent(name)}`;
}

function renderEmbed(description: string, resource: string, ctx: EmbedContext): string {
  const desc = escapeHtml(description);
  if (ctx.variables.has(resource)) {
    const media = ctx.variables.get(resource) ?? "";
    const url = variableUrl(ctx.apiBase, ctx.nodeId, resource);
    const isImage = media.startsWith("image/") || (media === "" && IMAGE_EXT.test(resource));
    if (isImage) {
      return `<figure class="embed-image"><img src="${escapeHtml(url)}" alt="${desc}"><figcaption>${desc}</figcaption></figure>`;
    }
    return `<a class="embed-file" href="${escapeHtml(url)}" download="${escapeHtml(resource)}">📄 ${desc || escapeHtml(resource)}</a>`;
  }
  if (URL_SCHEME.test(resource)) {
    return `<a class="embed-link" href="${escapeHtml(resource)}" target="_blank" rel="noopener">${desc || escapeHtml(resource)}</a>`;
  }
  return `<span class="embed-path" title="${escapeHtml(resource)}">📄 ${desc || escapeHtml(resource)}</span>`;
}

function renderProse(text: string, ctx: EmbedContext): string {
  let html = "";
  let cursor = 0;
  for (const match of text.matchAll(EMBED)) {
    const start = match.index ?? 0;
    html += escapeHtml(text.slice(cursor, start));
    html += renderEmbed(match[1], match[2], ctx);
    cursor = start + match[0].length;
  }
  html += escapeHtml(text.slice(cursor));
  return html;
}

/** Render one message body to HTML. */
export function renderBody(body: string, ctx: EmbedContext): string {
  const parts: string[] = [];
  const lines = body.split("\n");
  let fence: string[] | null = null;
  let prose: string[] = [];

  const flushProse = (): void => {
    if (prose.length) {
      parts.push(`<p>${renderProse(prose.join("\n"), ctx)}</p>`);
      prose = [];
    }
  };

  for (const line of lines) {
    if (line.startsWith("```")) {
      if (fence === null) {
        flushProse();
        fence = [];
      } else {
        parts.push(`<pre><code>${escapeHtml(fence.join("\n"))}</code></pre>`);
        fence = null;
      }
      continue;
    }
    if (fence !== null) {
      fence.push(line);
    } else {
      prose.push(line);
    }
  }
  if (fence !== null) {
    // unclosed fence: render what we have as code rather than losing it
    parts.push(`<pre><code>${escapeHtml(fence.join("\n"))}</code></pre>`);
  }
  flushProse();
  return parts.join("\n");
}
