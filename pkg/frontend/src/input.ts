// Keyboard state -> movement intent. Arrow keys and WASD; opposing keys cancel,
// diagonals are normalized so intents never exceed unit length.

export interface Intent {
  dx: number;
  dy: number;
}

const EAST = new Set(["ArrowRight", "KeyD"]);
const WEST = new Set(["ArrowLeft", "KeyA"]);
const NORTH = new Set(["ArrowUp", "KeyW"]);
const SOUTH = new Set(["ArrowDown", "KeyS"]);

function anyHeld(keys: ReadonlySet<string>, group: Set<string>): boolean {
  for (const k of group) {
    if (keys.has(k)) return true;
  }
  return false;
}

/** Unit-clamped intent for the held keys; null when nothing is held. */
export function intentFromKeys(keys: ReadonlySet<string>): Intent | null {
  let dx = 0;
  let dy = 0;
  if (anyHeld(keys, EAST)) dx += 1;
  if (anyHeld(keys, WEST)) dx -= 1;
  if (anyHeld(keys, NORTH)) dy += 1; // world y grows upward; render flips
  if (anyHeld(keys, SOUTH)) dy -= 1;
  if (dx === 0 && dy === 0) {
    if (anyHeld(keys, EAST) || anyHeld(keys, WEST) || anyHeld(keys, NORTH) || anyHeld(keys, SOUTH)) {
      return { dx: 0, dy: 0 }; // opposing keys cancel but still count as input
    }
    return null;
  }
  const norm = Math.hypot(dx, dy);
  return { dx: dx / norm, dy: dy / norm };
}

/** Tracks held keys from DOM events without mutating shared state elsewhere. */
export class KeyTracker {
  private readonly held = new Set<string>();

  down(code: string): void {
    this.held.add(code);
  }

  up(code: string): void {
    this.held.delete(code);
  }

  clear(): void {
    this.held.clear();
  }

  intent(): Intent | null {
    return intentFromKeys(this.held);
  }
}
