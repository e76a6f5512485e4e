// Generated from frontend/src/extract.ts - do not edit directly.
// Injected via WebDriver execute-script; returns the text-block JSON
// string consumed by the waffle render client.
"use strict";
// In-page walker that collects one block per visible text node:
// { text, bbox: [x, y, w, h], color: [r, g, b] } in document order.
//
// Compiled as a plain script (no module system) so the render client can
// inject it verbatim through WebDriver execute-script; the build step
// appends the `return JSON.stringify(...)` entry line.  The module.exports
// guard at the bottom only fires under the test runner.
// Content of these elements is never rendered text.
const NON_RENDERED_TAGS = {
    SCRIPT: true,
    STYLE: true,
    NOSCRIPT: true,
    TEMPLATE: true,
};
const ELEMENT_NODE = 1;
const TEXT_NODE = 3;
function clampChannel(value) {
    return Math.min(255, Math.max(0, Math.round(value)));
}
// Computed colors arrive as rgb(r, g, b), rgba(r, g, b, a) or the
// space-separated rgb(r g b / a) form; alpha is ignored.
function parseCssColor(css) {
    const match = /rgba?\(\s*(-?[\d.]+)[\s,]+(-?[\d.]+)[\s,]+(-?[\d.]+)/.exec(css || "");
    if (!match) {
        return [0, 0, 0];
    }
    return [
        clampChannel(parseFloat(match[1])),
        clampChannel(parseFloat(match[2])),
        clampChannel(parseFloat(match[3])),
    ];
}
// display:none removes the whole subtree from rendering and does not
// inherit, so every ancestor must be checked.
function inDisplayNoneSubtree(element, win) {
    for (let el = element; el; el = el.parentElement) {
        if (win.getComputedStyle(el).display === "none") {
            return true;
        }
    }
    return false;
}
// visibility inherits (and children may re-enable it), so the parent's
// computed value alone decides whether this text paints.
function isTextHidden(parent, win) {
    const visibility = win.getComputedStyle(parent).visibility;
    if (visibility === "hidden" || visibility === "collapse") {
        return true;
    }
    return inDisplayNoneSubtree(parent, win);
}
function textNodeRect(node) {
    const range = node.ownerDocument.createRange();
    range.selectNodeContents(node);
    return range.getBoundingClientRect();
}
function extractBlocks(doc, win) {
    const blocks = [];
    function walk(node) {
        for (let child = node.firstChild; child; child = child.nextSibling) {
            if (child.nodeType === ELEMENT_NODE) {
                const element = child;
                if (NON_RENDERED_TAGS[element.nodeName]) {
                    continue;
                }
                if (win.getComputedStyle(element).display === "none") {
                    continue; // nothing below a display:none root can paint
                }
                walk(element);
            }
            else if (child.nodeType === TEXT_NODE) {
                const text = (child.textContent || "").trim();
                const parent = child.parentElement;
                if (!text || !parent || isTextHidden(parent, win)) {
                    continue;
                }
                const rect = textNodeRect(child);
                if (rect.width <= 0 || rect.height <= 0) {
                    continue;
                }
                blocks.push({
                    text: text,
                    bbox: [rect.left, rect.top, rect.width, rect.height],
                    color: parseCssColor(win.getComputedStyle(parent).color),
                });
            }
        }
    }
    if (doc.body) {
        walk(doc.body);
    }
    return blocks;
}
return JSON.stringify(extractBlocks(document, window));
