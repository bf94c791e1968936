package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	rbacv1 "k8s.io/api/rbac/v1"
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// PipelineReconciler prepares credentials and permissions for pipeline runners.
type PipelineReconciler struct {
	client.Client
}

// Reconcile reads the credentials Secret and binds the runner account.
func (r *PipelineReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	p := &Pipeline{}
	if err := r.Get(ctx, req.NamespacedName, p); err != nil {
		return ctrl.Result{}, err
	}

	creds := &corev1.Secret{}
	credsKey := types.NamespacedName{Namespace: p.Spec.Credentials.Namespace, Name: p.Spec.Credentials.Name}
	if err := r.Get(ctx, credsKey, creds); err != nil {
		return ctrl.Result{}, err
	}

	binding := r.runnerBinding(p)
	if err := r.Create(ctx, binding); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}

func (r *PipelineReconciler) runnerBinding(p *Pipeline) *rbacv1.ClusterRoleBinding {
	subject := rbacv1.Subject{Kind: "ServiceAccount", Name: p.Spec.RunnerAccount, Namespace: p.Namespace}
	return &rbacv1.ClusterRoleBinding{
		ObjectMeta: metav1.ObjectMeta{Name: p.Name + "-runner"},
		Subjects:   []rbacv1.Subject{subject},
		RoleRef:    rbacv1.RoleRef{Kind: "ClusterRole", Name: p.Spec.RunnerRoleName},
	}
}
