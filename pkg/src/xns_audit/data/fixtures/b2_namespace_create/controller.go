package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// WorkspaceReconciler provisions a Namespace per Workspace.
type WorkspaceReconciler struct {
	client.Client
}

// Reconcile creates the backing Namespace named after the Workspace.
func (r *WorkspaceReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	ws := &Workspace{}
	if err := r.Get(ctx, req.NamespacedName, ws); err != nil {
		return ctrl.Result{}, err
	}

	ns := &corev1.Namespace{
		ObjectMeta: metav1.ObjectMeta{
			Name:   ws.Name + "-workspace",
			Labels: map[string]string{"workspace-owner": ws.Name},
		},
	}
	if err := r.Create(ctx, ns); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
