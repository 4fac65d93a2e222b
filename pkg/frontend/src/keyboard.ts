import { LABEL_KEYS } from "./types";

/**
 * Bind number-key shortcuts to the label buttons: 1/2/3 for the classes,
 * 0 for Other/Unknown. Returns the unbind function. Keystrokes inside
 * text inputs are ignored.
 */
export function bindShortcuts(
  candidateLabels: () => string[],
  onLabel: (label: string) => void,
  target: Pick<Window, "addEventListener" | "removeEventListener"> = window,
): () => void {
  const handler = (event: Event) => {
    const key = (event as KeyboardEvent).key;
    const element = (event as KeyboardEvent).target;
    if (
      element instanceof HTMLInputElement ||
      element instanceof HTMLTextAreaElement ||
      (element instanceof HTMLElement && element.isContentEditable)
    ) {
      return;
    }
    for (const label of candidateLabels()) {
      if (LABEL_KEYS[label] === key) {
        event.preventDefault();
        onLabel(label);
        return;
      }
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
